from .models_import import create_model_object
