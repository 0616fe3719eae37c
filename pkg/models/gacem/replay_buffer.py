import numpy as np

from errors import ContractError


class ReplayBuffer(object):
    """
    Every distinct grid design evaluated during a run, with its constraint
    value and the iteration that produced it. Entries are never removed.
    """

    def __init__(self, space):
        """
        Args:
            space (DesignSpace): Grid the designs live on

        Return:
            None
        """
        self.space       = space
        self._indices    = []
        self._values     = []
        self._iterations = []
        self._keys       = set()

    def __len__(self):
        return len(self._values)

    def __contains__(self, idx):
        return tuple(int(i) for i in idx) in self._keys

    def add(self, idx, value, iteration):
        """
        Returns:
            True if the design was new, False for a duplicate (which is not stored)
        """
        key = tuple(int(i) for i in idx)

        if key in self._keys:
            return False

        self._keys.add(key)
        self._indices.append(key)
        self._values.append(float(value))
        self._iterations.append(int(iteration))

        return True

    def extend(self, indices, values, iteration):
        return sum(self.add(idx, v, iteration) for idx, v in zip(indices, values))

    def keys(self):
        return set(self._keys)

    @property
    def indices(self):
        return np.asarray(self._indices, dtype=np.int64).reshape(-1, self.space.dims)

    @property
    def values(self):
        return np.asarray(self._values, dtype=np.float64)

    @property
    def iterations(self):
        return np.asarray(self._iterations, dtype=np.int64)

    @property
    def normalized(self):
        return self.space.index_to_normalized(self.indices)

    @property
    def designs(self):
        return self.space.index_to_design(self.indices)

    def satisfying_count(self):
        return int(np.sum(self.values <= 0))

    def sample_batch(self, batch_size, rng):
        """Uniform minibatch of entries drawn without replacement"""
        if len(self) == 0:
            raise ContractError('cannot draw from an empty replay buffer')

        pick = rng.choice(len(self), size=min(batch_size, len(self)), replace=False)
        return self.space.index_to_normalized(self.indices[pick]), self.values[pick]
