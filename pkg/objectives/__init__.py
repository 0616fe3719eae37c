from .loading_function import create_objective_object, create_design_space, create_constraint
