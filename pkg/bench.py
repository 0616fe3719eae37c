"""
Benchmark suites: the Cartesian grid of (objective, dims) x algorithm x seed,
run one member at a time or in a process pool, then aggregated into
seed-averaged curves and a final accuracy / entropy table.
"""
import os
import re
import sys
import csv
import json
import itertools
import multiprocessing

import pandas as pd

from parse_args                  import Parse
from errors                      import ConfigError, SuiteFailure
from models.models_import        import algorithm_names
from objectives.loading_function import objective_names
from train                       import train, run_directory

SUITE_KEYS       = ('objectives', 'algos', 'seeds', 'workers')
FAILURE_COLUMNS  = ['algorithm', 'objective', 'dims', 'seed', 'error', 'message']
MEMBER_PATTERN   = re.compile(r'^([a-z]+)(?:-(\d+)d)?$')


def expand_suite(**args):
    """
    Every member configuration of the suite

    Args:
        objectives (List/None): Objective names, 'name' or 'name-<d>d'; [objective] when None
        dims       (Int/List):  Dimensions used by entries without a '-<d>d' suffix
        algos      (List/None): Algorithm names; [algo] when None
        seeds      (List/None): Seeds; [seed] when None

    Return:
        List of run configurations, ordered objective, algorithm, seed
    """
    objectives = args['objectives'] if args['objectives'] is not None else [args['objective']]
    algos      = args['algos']      if args['algos']      is not None else [args['algo']]
    seeds      = args['seeds']      if args['seeds']      is not None else [args['seed']]
    dims       = args['dims'] if isinstance(args['dims'], list) else [args['dims']]

    if len(seeds) == 0:
        raise ConfigError('suite seed list is empty')

    if len(objectives) == 0 or len(algos) == 0:
        raise ConfigError('suite needs at least one objective and one algorithm')

    unknown = sorted(set(str(a).lower() for a in algos) - set(algorithm_names()))
    if unknown:
        raise ConfigError('unknown algorithms {}; valid names: {}'.format(', '.join(unknown), ', '.join(algorithm_names())))

    problems = []
    for entry in objectives:
        match = MEMBER_PATTERN.match(str(entry).lower())

        if match is None or match.group(1) not in objective_names():
            raise ConfigError('unknown suite objective {!r}; valid names: {}'.format(entry, ', '.join(objective_names())))

        if match.group(2) is not None:
            problems.append((match.group(1), int(match.group(2))))
        else:
            problems.extend((match.group(1), int(d)) for d in dims)

    # END FOR

    base    = {k: v for k, v in args.items() if k not in SUITE_KEYS}
    members = []

    for (objective, d), algo, seed in itertools.product(problems, algos, seeds):
        members.append(dict(base, objective=objective, dims=d, algo=str(algo).lower(), seed=int(seed)))

    return members


def _run_member(member):
    """Run one suite member; failures are returned, never raised"""
    try:
        run_dir, report = train(**member)
        return member, run_dir, None

    except Exception as err:
        return member, run_directory(**member), err


def aggregate(results):
    """
    Seed-averaged curves and summary table of the successful members

    Args:
        results (List): (member, run_dir) pairs, any completion order

    Return:
        (curves DataFrame, summary DataFrame)
    """
    keys   = ['algorithm', 'objective', 'dims']
    curves = []
    finals = []

    for member, run_dir in sorted(results, key=lambda r: (r[0]['algo'], r[0]['objective'], r[0]['dims'], r[0]['seed'])):
        run = pd.read_csv(os.path.join(run_dir, 'run.csv'))
        run = run.assign(algorithm=member['algo'], objective=member['objective'], dims=member['dims'], seed=member['seed'])
        curves.append(run)

        with open(os.path.join(run_dir, 'metrics.json'), 'r') as f:
            report = json.load(f)

        finals.append(dict(algorithm=member['algo'], objective=member['objective'], dims=member['dims'], seed=member['seed'],
                           accuracy_pct=report['accuracy_pct'], entropy_per_dim=report['entropy_per_dim'],
                           mode_coverage=report['mode_coverage']))

    # END FOR

    if not curves:
        return pd.DataFrame(), pd.DataFrame()

    curves = pd.concat(curves, ignore_index=True)
    curves = curves.groupby(keys + ['evals']).agg(n_seeds           = ('seed', 'count'),
                                                  satisfying_mean   = ('satisfying_count', 'mean'),
                                                  satisfying_stderr = ('satisfying_count', 'sem'),
                                                  top20_mean        = ('top20_avg', 'mean'),
                                                  top20_stderr      = ('top20_avg', 'sem')).reset_index()

    summary = pd.DataFrame(finals).groupby(keys).agg(n_seeds          = ('seed', 'count'),
                                                     accuracy_pct     = ('accuracy_pct', 'mean'),
                                                     accuracy_stderr  = ('accuracy_pct', 'sem'),
                                                     entropy_per_dim  = ('entropy_per_dim', 'mean'),
                                                     entropy_stderr   = ('entropy_per_dim', 'sem'),
                                                     mode_coverage    = ('mode_coverage', 'mean')).reset_index()

    # a single seed has no standard error
    return curves.fillna({'satisfying_stderr': 0., 'top20_stderr': 0.}), summary.fillna({'accuracy_stderr': 0., 'entropy_stderr': 0.})


def check_suite(succeeded, failures):
    if not succeeded:
        raise SuiteFailure('all {} suite runs failed'.format(len(failures)))


def bench(**args):
    """
    Run a suite and write curves.csv, summary.csv and failures.csv into out
    Args:
        out     (String): Top level results directory
        workers (Int):    Members run in parallel processes

    Return:
        (summary DataFrame, list of failures); raises SuiteFailure when no run succeeded
    """
    members = expand_suite(**args)
    workers = int(args.get('workers') or 1)

    print("\n############################################################################\n")
    print("Suite: {} runs, {} worker(s)".format(len(members), workers))
    print("\n############################################################################\n")

    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            outcomes = list(pool.imap_unordered(_run_member, members))
    else:
        outcomes = [_run_member(member) for member in members]

    # END IF

    succeeded = [(member, run_dir) for member, run_dir, err in outcomes if err is None]
    failures  = [(member, err) for member, _, err in outcomes if err is not None]

    for member, err in failures:
        print('Run failed: {} {}{}d seed {} | {}: {}'.format(member['algo'], member['objective'], member['dims'], member['seed'], type(err).__name__, err))

    if args['debug']:
        check_suite(succeeded, failures)
        return pd.DataFrame(), failures

    curves, summary = aggregate(succeeded)

    os.makedirs(args['out'], exist_ok=True)

    curves.to_csv(os.path.join(args['out'], 'curves.csv'), index=False)
    summary.to_csv(os.path.join(args['out'], 'summary.csv'), index=False)

    with open(os.path.join(args['out'], 'failures.csv'), 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(FAILURE_COLUMNS)

        for member, err in failures:
            writer.writerow([member['algo'], member['objective'], member['dims'], member['seed'], type(err).__name__, str(err)])

        # END FOR

    print(summary.to_string(index=False))
    check_suite(succeeded, failures)

    return summary, failures


if __name__ == '__main__':

    parse = Parse(['bench'] + sys.argv[1:])
    args  = parse.get_args()

    bench(**args)
