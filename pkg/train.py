import os
import sys
import csv
import time
import yaml
import torch

import numpy as np

from tensorboardX                       import SummaryWriter

from parse_args                         import Parse
from objectives                         import create_design_space, create_constraint
from models.models_import               import create_model_object
from models.abstract_optimizers         import search_loop, derived_seed
from metrics                            import Metrics, RUN_COLUMNS, draw, top_k_average
from checkpoint                         import save_checkpoint

# tags of the seeded streams used after training
FINAL_METRICS_TAG = 4
FINAL_SAMPLES_TAG = 5


def run_directory(**args):
    """<out>/<algo>/<objective><dims>d_<exp>_seed<seed>"""
    name = '{}{}d_{}_seed{}'.format(args['objective'], args['dims'], args['exp'], args['seed'])
    return os.path.join(args['out'], args['algo'], name)


def write_samples(path, space, constraint, x_norm):
    """
    Designs in original coordinates, one per row, followed by their constraint value
    """
    designs = space.from_normalized(x_norm)
    values  = constraint(designs)

    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['x{}'.format(j + 1) for j in range(space.dims)] + ['f'])

        for x, v in zip(designs, values):
            writer.writerow(['{:.10g}'.format(xi) for xi in x] + ['{:.10g}'.format(v)])

        # END FOR


def train(**args):
    """
    Run one (algorithm, objective, seed) experiment
    Args:
        algo           (String): Name of the search algorithm
        objective      (String): Name of the benchmark function
        dims           (Int):    Number of design variables
        seed           (Int):    Integer indicating set seed for random state
        iters          (Int):    Number of search iterations
        out            (String): Top level directory to generate results folder
        exp            (String): Name of experiment
        debug          (Int):    Debug state to avoid saving variables
        wall_clock     (Int):    Write elapsed seconds into run.csv (breaks byte-identical reruns)
        eval_samples   (Int):    Samples used by the final metrics
        final_samples  (Int):    Designs written to samples.csv

    Return:
        (run directory, final metrics dict)
    """

    print("\n############################################################################\n")
    print("Experimental Setup: ", args)
    print("\n############################################################################\n")

    # For reproducibility
    torch.backends.cudnn.deterministic = True
    torch.manual_seed(args['seed'])
    np.random.seed(args['seed'])

    space      = create_design_space(**args)
    constraint = create_constraint(**args)
    algo       = create_model_object(space, constraint, **args)

    # Generate Results Directory
    result_dir = run_directory(**args)
    log_dir    = os.path.join(result_dir, 'logs')
    tag        = args['objective'] + '/' + args['algo'] + '/'

    if not args['debug']:
        os.makedirs(log_dir, exist_ok=True)

        # Save copy of config file
        with open(os.path.join(result_dir, 'config.yaml'), 'w') as outfile:
            yaml.dump(args, outfile, default_flow_style=False)

        # Tensorboard Element
        writer  = SummaryWriter(log_dir)
        run_csv = open(os.path.join(result_dir, 'run.csv'), 'w', newline='')
        rows    = csv.writer(run_csv, lineterminator='\n')
        rows.writerow(RUN_COLUMNS)

    # END IF

    start  = time.time()
    last   = None
    buffer = None

    try:
        for record, buffer in search_loop(algo, space, constraint, **args):
            last    = record
            elapsed = time.time() - start

            if not args['wall_clock']:
                record.seconds = 0.

            print('Iteration: {}/{} | evals: {} | satisfying: {} | top{} avg: {:.4f} | accuracy: {:.2f} % | entropy/dim: {:.4f} | {:.1f}s'.format(
                  record.iteration, args['iters'], record.evals, record.satisfying_count, args['top_k'],
                  record.top20_avg, record.accuracy_pct, record.entropy_per_dim, elapsed))

            if not args['debug']:
                rows.writerow(record.as_row())
                run_csv.flush()

                writer.add_scalar(tag + 'satisfying_count', record.satisfying_count, record.evals)
                writer.add_scalar(tag + 'top20_avg',        record.top20_avg,        record.evals)
                writer.add_scalar(tag + 'accuracy',         record.accuracy_pct,     record.evals)
                writer.add_scalar(tag + 'entropy_per_dim',  record.entropy_per_dim,  record.evals)
                writer.add_scalar(tag + 'seconds',          elapsed,                 record.evals)

            # END IF

        # END FOR

    finally:
        if not args['debug']:
            run_csv.close()
            writer.close()

    # END TRY

    report = Metrics(constraint=constraint, space=space, eval_samples=args['eval_samples']).get_report(
                     algo, derived_seed(args['seed'], FINAL_METRICS_TAG))

    report.update(algorithm        = algo.name,
                  objective        = args['objective'],
                  dims             = args['dims'],
                  seed             = args['seed'],
                  iterations       = last.iteration,
                  evals            = last.evals,
                  satisfying_count = buffer.satisfying_count(),
                  top20_avg        = top_k_average(buffer, args['top_k']))

    print('Final accuracy: {:.2f} % | entropy/dim: {:.4f} | mode coverage: {}'.format(
          report['accuracy_pct'], report['entropy_per_dim'], report['mode_coverage']))

    if not args['debug']:
        save_checkpoint(algo, args, last.iteration, os.path.join(result_dir, 'model.ckpt'))

        with open(os.path.join(result_dir, 'metrics.json'), 'w') as f:
            f.write(Metrics.dumps(report))

        x = draw(algo, args['final_samples'], derived_seed(args['seed'], FINAL_SAMPLES_TAG))
        write_samples(os.path.join(result_dir, 'samples.csv'), space, constraint, x)

    # END IF

    return result_dir, report


if __name__ == "__main__":

    parse = Parse(['run'] + sys.argv[1:])
    args  = parse.get_args()

    train(**args)
