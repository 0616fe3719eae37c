import json
import dataclasses
import numpy as np
import torch

from errors import ContractError, UnsupportedMetricError

RUN_COLUMNS = ['iteration', 'evals', 'satisfying_count', 'top20_avg', 'accuracy_pct', 'entropy_per_dim', 'seconds']


@dataclasses.dataclass
class RunRecord:
    """One row of run.csv"""
    iteration:        int
    evals:            int
    satisfying_count: int
    top20_avg:        float
    accuracy_pct:     float
    entropy_per_dim:  float
    seconds:          float

    def as_row(self):
        return [str(self.iteration), str(self.evals), str(self.satisfying_count),
                '{:.6f}'.format(self.top20_avg), '{:.4f}'.format(self.accuracy_pct),
                '{:.6f}'.format(self.entropy_per_dim), '{:.3f}'.format(self.seconds)]


def to_numpy(x):
    if isinstance(x, torch.Tensor):
        return x.detach().cpu().numpy()
    return np.asarray(x)


def draw(sampler, n, seed):
    """Normalized grid designs [n, d] from any sampler"""
    with torch.no_grad():
        return to_numpy(sampler.sample(n, seed))


def score(sampler, x):
    """Exact discrete log-probability of designs under their own sampler"""
    if not hasattr(sampler, 'log_prob_discrete'):
        raise UnsupportedMetricError('{} does not expose a log-probability'.format(type(sampler).__name__))

    with torch.no_grad():
        return to_numpy(sampler.log_prob_discrete(x))


def accuracy(sampler, constraint, space, n=5000, seed=0):
    """
    Percentage of n fresh samples that satisfy the constraint

    Args:
        sampler    (Object):      Exposes sample(n, seed) -> normalized designs
        constraint (Constraint):  Constraint to check, satisfied when <= 0
        space      (DesignSpace): Maps normalized designs to original coordinates
        n          (Int):         Number of samples
        seed       (Int):         Sampling seed

    Return:
        Percentage in [0, 100]
    """
    x = draw(sampler, n, seed)
    f = constraint(space.from_normalized(x))

    return 100. * float(np.sum(f <= 0)) / n


def entropy_per_dim(sampler, n=5000, seed=0):
    """
    -(1/n) sum log q(x_i) / d in nats, for x_i drawn from q itself
    """
    x = draw(sampler, n, seed)
    return float(-np.mean(score(sampler, x)) / x.shape[1])


def top_k_average(buffer, k=20):
    """
    Mean of the k smallest values (all values when fewer than k)

    Args:
        buffer (ReplayBuffer/Array): Evaluated constraint values
        k      (Int)
    """
    values = buffer.values if hasattr(buffer, 'values') else np.asarray(buffer, dtype=np.float64)

    if values.size == 0:
        raise ContractError('top_k_average needs a nonempty buffer')

    return float(np.mean(np.sort(values)[:k]))


def mode_coverage_synt(samples, constraint, near_zero=0.5):
    """
    Number of sign-pattern orthants holding at least max(5, 1% of satisfying)
    satisfying samples. Samples with any |x_j| <= near_zero are discarded.

    Args:
        samples    (Array, shape [n, d]): Designs in original coordinates
        constraint (Constraint):          Must wrap the synt objective

    Return:
        Count of covered orthants in [0, 2^d]
    """
    if constraint.objective.name != 'synt':
        raise UnsupportedMetricError('mode coverage is only defined for synt, got {}'.format(constraint.objective.name))

    samples = np.asarray(samples, dtype=np.float64)
    sat     = samples[constraint(samples) <= 0]

    if len(sat) == 0:
        return 0

    minimum = max(5, 0.01 * len(sat))
    clear   = sat[np.all(np.abs(sat) > near_zero, axis=1)]

    if len(clear) == 0:
        return 0

    _, counts = np.unique(clear > 0, axis=0, return_counts=True)

    return int(np.sum(counts >= minimum))


class Metrics(object):
    def __init__(self, *args, **kwargs):
        """
        Final report of a trained sampler

        Args:
            constraint   (Constraint):  Run constraint
            space        (DesignSpace): Run design space
            eval_samples (Int):         Samples drawn per metric

        Return:
            None
        """
        self.constraint = kwargs['constraint']
        self.space      = kwargs['space']
        self.n          = kwargs.get('eval_samples', 5000)

    def get_report(self, sampler, seed):
        """
        Returns:
            dict with accuracy_pct, entropy_per_dim and (synt only) mode_coverage
        """
        report = dict(accuracy_pct    = accuracy(sampler, self.constraint, self.space, self.n, seed),
                      entropy_per_dim = entropy_per_dim(sampler, self.n, seed),
                      mode_coverage   = None)

        if self.constraint.objective.name == 'synt':
            x = self.space.from_normalized(draw(sampler, self.n, seed))
            report['mode_coverage'] = mode_coverage_synt(x, self.constraint)

        # END IF

        return report

    @staticmethod
    def dumps(report):
        return json.dumps(report, indent=2, sort_keys=True)
