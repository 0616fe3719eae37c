import numpy as np

from errors import CapacityError, ConfigError, ContractError

MAX_ENUMERATION = 10 ** 6


class DesignSpace(object):
    """
    Box-bounded design space discretized into N bins per dimension.

    Bin k of a dimension has its center at lower + (k + 0.5) * (upper - lower) / N,
    which maps affinely onto -1 + (k + 0.5) * delta on the normalized axis [-1, 1].
    """

    def __init__(self, dims, lower, upper, grid=100):
        """
        Args:
            dims  (Int):          Number of design variables
            lower (Float/List):   Lower bound, scalar or one per dimension
            upper (Float/List):   Upper bound, scalar or one per dimension
            grid  (Int):          Number of bins N per dimension

        Return:
            None
        """
        if int(dims) < 1:
            raise ConfigError('dims must be >= 1, got {}'.format(dims))

        if int(grid) < 1:
            raise ConfigError('grid must be >= 1, got {}'.format(grid))

        self.dims  = int(dims)
        self.grid  = int(grid)
        self.lower = np.broadcast_to(np.asarray(lower, dtype=np.float64), (self.dims,)).copy()
        self.upper = np.broadcast_to(np.asarray(upper, dtype=np.float64), (self.dims,)).copy()

        if np.any(self.lower >= self.upper):
            raise ConfigError('every lower bound must be below its upper bound')

        self.delta = 2. / self.grid

    def __repr__(self):
        return 'DesignSpace(dims={}, grid={}, lower={}, upper={})'.format(self.dims, self.grid, self.lower.tolist(), self.upper.tolist())

    def to_normalized(self, x):
        return 2. * (np.asarray(x, dtype=np.float64) - self.lower) / (self.upper - self.lower) - 1.

    def from_normalized(self, x_norm):
        return self.lower + (np.asarray(x_norm, dtype=np.float64) + 1.) * (self.upper - self.lower) / 2.

    def length_to_normalized(self, length):
        """Per-dimension length in design units measured on the normalized axis"""
        return 2. * np.asarray(length, dtype=np.float64) / (self.upper - self.lower)

    def index_to_normalized(self, idx):
        return -1. + (np.asarray(idx, dtype=np.float64) + 0.5) * self.delta

    def normalized_to_index(self, x_norm):
        """
        Snap normalized values to the bin containing them; values outside
        [-1, 1] land in the boundary bin
        """
        idx = np.floor((np.asarray(x_norm, dtype=np.float64) + 1.) / self.delta)
        return np.clip(idx, 0, self.grid - 1).astype(np.int64)

    def index_to_design(self, idx):
        return self.from_normalized(self.index_to_normalized(idx))

    def design_to_index(self, x):
        return self.normalized_to_index(self.to_normalized(x))

    def snap(self, x):
        """Snap designs in original coordinates onto the grid"""
        return self.index_to_design(self.design_to_index(x))

    def is_on_grid(self, x_norm, tol=1e-6):
        pos = (np.asarray(x_norm, dtype=np.float64) + 1.) / self.delta - 0.5
        return bool(np.all(np.abs(pos - np.round(pos)) <= tol) and np.all(pos > -0.5) and np.all(pos < self.grid - 0.5))

    def check_on_grid(self, x_norm):
        if not self.is_on_grid(x_norm):
            raise ContractError('design does not lie on the grid')

    def random_indices(self, n, rng):
        return rng.integers(0, self.grid, size=(n, self.dims))

    def size(self):
        return self.grid ** self.dims

    def enumerate_indices(self, max_points=MAX_ENUMERATION):
        """
        Every grid point as an index array of shape [N^d, d]
        """
        if self.size() > max_points:
            raise CapacityError('grid has {}^{} points, more than {} allowed'.format(self.grid, self.dims, max_points))

        return np.indices((self.grid,) * self.dims).reshape(self.dims, -1).T
