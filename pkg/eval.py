import os
import sys
import torch

import numpy as np

from parse_args                         import Parse
from errors                             import ConfigError
from objectives                         import create_design_space, create_constraint
from models.models_import               import create_model_object
from metrics                            import Metrics, draw
from checkpoint                         import load_checkpoint
from train                              import write_samples


def restore(run_dir):
    """
    Rebuild the trained sampler of a run directory from its checkpoint alone

    Args:
        run_dir (String): Run directory holding model.ckpt

    Return:
        (algorithm, config, space, constraint)
    """
    path = os.path.join(run_dir, 'model.ckpt')

    if not os.path.isfile(path):
        raise ConfigError('no checkpoint found at {}'.format(path))

    ckpt   = load_checkpoint(path, key_name=None)
    config = dict(ckpt['config'])

    space      = create_design_space(**config)
    constraint = create_constraint(**config)
    algo       = create_model_object(space, constraint, **config)

    algo.load_state_dict(ckpt['state_dict'])

    return algo, config, space, constraint


def eval(**args):
    """
    Recompute the final metrics of a trained run
    Args:
        run_dir (String):   Run directory holding model.ckpt
        seed    (Int/None): Evaluation seed, seed of the run plus 1 when None
        n       (Int/None): Samples per metric, eval_samples of the run when None

    Return:
        Metrics dict
    """
    algo, config, space, constraint = restore(args['run_dir'])

    seed = args['seed'] if args.get('seed') is not None else config['seed'] + 1
    n    = args['n'] if args.get('n') is not None else config['eval_samples']

    torch.manual_seed(seed)
    np.random.seed(seed)

    report = Metrics(constraint=constraint, space=space, eval_samples=n).get_report(algo, seed)
    report.update(algorithm=algo.name, objective=config['objective'], dims=config['dims'], eval_seed=seed, n=n)

    print(Metrics.dumps(report))

    return report


def sample(**args):
    """
    Write n designs of a trained sampler, in original coordinates, with their constraint values
    Args:
        run_dir (String):      Run directory holding model.ckpt
        n       (Int/None):    Number of designs, final_samples of the run when None
        seed    (Int/None):    Sampling seed, seed of the run plus 1 when None
        out     (String/None): Output csv, <run_dir>/samples_<seed>.csv when None

    Return:
        Path of the written csv
    """
    algo, config, space, constraint = restore(args['run_dir'])

    seed = args['seed'] if args.get('seed') is not None else config['seed'] + 1
    n    = args['n'] if args.get('n') is not None else config['final_samples']
    path = args.get('out') or os.path.join(args['run_dir'], 'samples_{}.csv'.format(seed))

    if n < 1:
        raise ConfigError('n must be a positive integer, got {}'.format(n))

    write_samples(path, space, constraint, draw(algo, n, seed))
    print('Wrote {} designs to {}'.format(n, path))

    return path


if __name__ == '__main__':

    parse = Parse(['eval'] + sys.argv[1:])
    args  = parse.get_args()

    eval(**args)
