import argparse
import yaml

from errors import ConfigError

FLOAT_KEYS = ('threshold', 'beta', 'lr', 'rho', 'sigma_gacem', 'elite_pct', 'sigma_cem', 'sigma_init', 'sigma_end')


class Parse():

    def __init__(self, argv=None):
        """
        Override config args with command-line args

        Args:
            argv (List/None): Command-line tokens, sys.argv[1:] when None
        """

        parser   = argparse.ArgumentParser(prog='gacem', description='Constraint satisfaction with GACEM and CEM baselines')
        commands = parser.add_subparsers(dest='command')
        commands.required = True

        run   = commands.add_parser('run',    help='Train one (algorithm, objective, seed) and write a run directory')
        bench = commands.add_parser('bench',  help='Run a suite of runs and aggregate curves and tables')
        evalc = commands.add_parser('eval',   help='Recompute final metrics of a run directory')
        samp  = commands.add_parser('sample', help='Draw designs from the sampler of a run directory')

        #Command-line arguments will override any config file arguments
        for sub in (run, bench):
            sub.add_argument('--config', type=str, help='Configuration file (run) or suite file (bench)')
            sub.add_argument('--seed',   type=int, help='Seed for reproducibility')
            sub.add_argument('--out',    type=str, help='Path to results directory')
            sub.add_argument('--iters',  type=int, help='Number of search iterations')
            sub.add_argument('--debug',  type=int, help='Run an experiment but do not save any data or create any folders')

        run.add_argument('--algo',      type=str, help='Name of the search algorithm')
        run.add_argument('--objective', type=str, help='Name of the benchmark function')
        run.add_argument('--dims',      type=int, help='Number of design variables')
        run.add_argument('--exp',       type=str, help='Experiment name')

        bench.add_argument('--workers', type=int, help='Number of suite members run in parallel processes')

        for sub in (evalc, samp):
            sub.add_argument('run_dir', type=str,   help='Run directory holding model.ckpt')
            sub.add_argument('--seed',  type=int,   default=None, help='Sampling seed (default: seed of the run plus 1)')
            sub.add_argument('--n',     type=int,   default=None, help='Number of samples')
            sub.add_argument('--out',   type=str,   default=None, help='Output file (sample only, default <run_dir>/samples_<seed>.csv)')

        # Default dict, every key a config file may set
        self.defaults = dict(
            algo              = 'gacem-off',
            objective         = 'synt',
            dims              = 2,
            threshold         = None,
            bounds            = None,
            grid              = 100,
            seed              = 0,
            iters             = 60,
            n_init            = 50,
            n_s               = 25,
            out               = './results',
            exp               = 'exp',
            debug             = 0,
            wall_clock        = 0,
            record_samples    = 500,
            eval_samples      = 5000,
            final_samples     = 5000,
            top_k             = 20,
            # gacem
            beta              = 0.01,
            n_e               = 10,
            batches_per_epoch = 4,
            batch_size        = 16,
            lr                = 5e-3,
            rho               = 0.4,
            ratio             = 'off',
            clip              = [0.1, 10.],
            nr_mix            = 40,
            hidden            = [100, 100, 100],
            first_unit_hidden = [100],
            fixed_sigma       = 1,
            sigma_gacem       = 0.05,
            # cem
            elite_pct         = 40.,
            sigma_cem         = 0.05,
            sigma_init        = 0.5,
            sigma_end         = 0.01,
            weighting         = 'equal')

        # Suite keys of bench, on top of every run key
        self.suite_defaults = dict(
            objectives = None,
            algos      = None,
            seeds      = None,
            workers    = 1)

        #Dictionary of the command-line arguments passed
        self.cmd_args = vars(parser.parse_args(argv))
        self.command  = self.cmd_args.pop('command')
        self.cfg_args = dict()

        config_file = self.cmd_args.pop('config', None)
        if config_file is not None:
            self.cfg_args = load_config_file(config_file) #config file arguments

    def get_args(self):
        """
        Returns:
            Dict of the effective configuration; eval and sample return their flags
        """
        if self.command in ('eval', 'sample'):
            return dict(self.cmd_args, command=self.command)

        allowed = dict(self.defaults, **self.suite_defaults) if self.command == 'bench' else self.defaults
        check_keys(self.cfg_args, allowed)

        args = dict(allowed)
        args.update(self.cfg_args)

        for (k, v) in self.cmd_args.items():
            if v is not None:
                args[k] = v

        return validate(args)


def load_config_file(path):
    try:
        with open(path, 'r') as f:
            cfg = yaml.safe_load(f)

    except (IOError, OSError) as err:
        raise ConfigError('cannot read config file {}: {}'.format(path, err))

    except yaml.YAMLError as err:
        raise ConfigError('malformed config file {}: {}'.format(path, err))

    if cfg is None:
        return dict()

    if not isinstance(cfg, dict):
        raise ConfigError('config file {} must hold key: value pairs'.format(path))

    return cfg


def check_keys(cfg, allowed):
    unknown = sorted(set(cfg) - set(allowed))

    if unknown:
        raise ConfigError('unknown config keys: {}'.format(', '.join(unknown)))


def as_float(key, value):
    # yaml 1.1 reads exponents without a dot, such as 5e-3, as strings
    if isinstance(value, bool):
        raise ConfigError('{} must be a number, got {!r}'.format(key, value))

    try:
        return float(value)

    except (TypeError, ValueError):
        raise ConfigError('{} must be a number, got {!r}'.format(key, value))


def validate(args):
    """
    Reject configurations the harness cannot run
    """
    for key in ('dims', 'grid', 'iters', 'n_init', 'n_s', 'n_e', 'batches_per_epoch', 'batch_size', 'nr_mix', 'record_samples', 'eval_samples', 'final_samples', 'top_k'):
        # suites may list several dims
        values = args[key] if isinstance(args.get(key), list) and key == 'dims' else [args.get(key, 1)]

        if any(not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in values):
            raise ConfigError('{} must be a positive integer, got {!r}'.format(key, args[key]))

    for key in FLOAT_KEYS:
        if args.get(key) is not None:
            args[key] = as_float(key, args[key])

    clip = args.get('clip', [0.1, 10.])
    if not isinstance(clip, (list, tuple)):
        raise ConfigError('clip must be a [lo, hi] pair, got {!r}'.format(clip))

    clip = args['clip'] = [as_float('clip', c) for c in clip]

    if args.get('lr', 1.) <= 0:
        raise ConfigError('lr must be > 0, got {}'.format(args['lr']))

    if len(clip) != 2 or not 0 < clip[0] <= 1 <= clip[1]:
        raise ConfigError('clip bounds must satisfy 0 < lo <= 1 <= hi, got {}'.format(clip))

    if args.get('ratio', 'off') not in ('off', 'clipped', 'exact'):
        raise ConfigError('ratio must be off, clipped or exact, got {!r}'.format(args['ratio']))

    return args
