import numpy as np
import torch


def _to_tensors(state):
    """numpy arrays become float64/int64 tensors so every saved array carries its shape"""
    if isinstance(state, dict):
        return {k: _to_tensors(v) for k, v in state.items()}

    if isinstance(state, (list, tuple)):
        return type(state)(_to_tensors(v) for v in state)

    if isinstance(state, np.ndarray):
        return torch.from_numpy(state.copy())

    if isinstance(state, np.generic):
        return state.item()

    return state


def save_checkpoint(algo, config, iteration, save_path):
    """
    Save checkpoint pickle file with the sampler state and the settings needed to rebuild it
    Args:
        algo      (SearchAlgorithm): Trained search algorithm
        config    (Dict):            Effective run configuration
        iteration (Int):             Last completed iteration
        save_path (String):          Full path of the checkpoint file

    Return:
        None
    """
    state_dict = algo.state_dict()

    state = {   'algorithm': algo.name,
                'config':    _to_tensors(dict(config)),
                'ordering':  list(range(algo.space.dims)),
                'iteration': int(iteration),
                'state_dict': _to_tensors({k: v for k, v in state_dict.items() if k != 'optimizer'}),
                'optimizer':  state_dict.get('optimizer'),
             }

    torch.save(state, save_path)


def load_checkpoint(name, key_name='state_dict'):
    """
    Load checkpoint pickle file and return selected element from pickle file
    Args:
        name     (String): Full path, including pickle file name, to load
        key_name (String): Key name to return from saved pickle file, None for the whole dict

    Return:
        Selected element from loaded checkpoint pickle file
    """
    checkpoint = torch.load(name, map_location='cpu', weights_only=False)

    if key_name is None:
        return checkpoint

    return checkpoint[key_name]
