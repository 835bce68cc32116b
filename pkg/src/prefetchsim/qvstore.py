"""Hierarchical Q-value storage: vaults of tile-coding planes.

One vault per program feature. Inside a vault, each plane is a small
2-D table (feature bins x actions) holding partial Q-values; the vault's
Q for a (feature value, action) pair is the sum over planes. The store's
Q for a (state, action) pair is the maximum over vaults, so the most
confident feature drives the estimate.

A plane maps a 64-bit feature value to one of its bins by shifting it by
the plane's shift constant and hashing (multiply-shift with a per-plane odd
multiplier). The shift constants differ across planes, which is what makes
the quantizations overlap: nearby feature values share some tiles but not
all, trading resolution against generalization. An identity hash mode is
kept for table-equivalence testing against a monolithic Q-table.

Every entry starts at q_init/num_planes so a fresh vault sums to
q_init = 1/(1 - gamma), the highest value an all-max-reward policy could
accumulate; optimistic initialization drives early exploration.

Learning increments are applied so the recomputed Q changes by exactly the
increment: within a vault the increment is split evenly across planes, and
by default every vault is updated (each vault keeps its own feature-action
estimate; the max picks the most confident). Updating only the maximizing
vault is available as a study mode.

Q-values are real-valued here; the 16-bit fixed-point budget of a hardware
table shows up only in storage_report.
"""

from __future__ import annotations

from dataclasses import dataclass

from .features import StateVector

# Fixed odd multipliers, one per plane, for the multiply-shift hash.
_PLANE_MULTIPLIERS = (
    0x9E3779B97F4A7C15,
    0xC2B2AE3D27D4EB4F,
    0x165667B19E3779F9,
    0xD6E8FEB86659FD93,
    0xA0761D6478BD642F,
    0xE7037ED1A0B428DB,
)

_U64 = (1 << 64) - 1

QVALUE_BITS = 16
EQ_STATE_BITS = 21
EQ_ACTION_BITS = 5
EQ_REWARD_BITS = 5
EQ_FILLED_BITS = 1
EQ_ADDRESS_BITS = 16


class Plane:
    """One tile-coding table: feature bins x actions of partial Q-values."""

    def __init__(self, shift_constant: int, bins: int, num_actions: int,
                 init_value: float, multiplier: int, hash_kind: str):
        self.shift_constant = shift_constant
        self.bins = bins
        self.num_actions = num_actions
        self.multiplier = multiplier
        self.hash_kind = hash_kind
        self._bin_shift = 64 - bins.bit_length() + 1  # bins is a power of two
        self.table = [[init_value] * num_actions for _ in range(bins)]

    def index(self, feature_value: int) -> int:
        shifted = (feature_value & _U64) >> self.shift_constant
        if self.hash_kind == "identity":
            return shifted % self.bins
        return ((shifted * self.multiplier) & _U64) >> self._bin_shift


class Vault:
    """Q-values for one feature: partial values summed across planes."""

    def __init__(self, num_planes: int, shifts, bins: int, num_actions: int,
                 q_init: float, hash_kind: str):
        self.planes = [
            Plane(shifts[i], bins, num_actions, q_init / num_planes,
                  _PLANE_MULTIPLIERS[i % len(_PLANE_MULTIPLIERS)], hash_kind)
            for i in range(num_planes)
        ]
        # feature value -> per-plane table rows; rows are identity-stable,
        # so cached references stay valid across in-place updates
        self._row_cache: dict[int, tuple] = {}

    def bin_indices(self, feature_value: int) -> list:
        return [p.index(feature_value) for p in self.planes]

    def rows(self, feature_value: int) -> tuple:
        cached = self._row_cache.get(feature_value)
        if cached is None:
            cached = tuple(p.table[p.index(feature_value)] for p in self.planes)
            self._row_cache[feature_value] = cached
        return cached

    def q_value(self, feature_value: int, action: int) -> float:
        total = 0.0
        for row in self.rows(feature_value):
            total += row[action]
        return total


class QVStore:
    """One vault per feature; Q(state, action) = max over vaults."""

    def __init__(self, num_features: int, num_actions: int, gamma: float,
                 num_planes: int = 3, plane_shifts=(0, 2, 5), feature_bins: int = 128,
                 hash_kind: str = "multiply_shift", update_mode: str = "all_vaults"):
        if not (0.0 <= gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        if feature_bins & (feature_bins - 1):
            raise ValueError("feature_bins must be a power of two")
        if len(plane_shifts) != num_planes:
            raise ValueError("plane_shifts must list one shift per plane")
        if hash_kind not in ("multiply_shift", "identity"):
            raise ValueError(f"unknown hash kind {hash_kind!r}")
        if update_mode not in ("all_vaults", "max_vault"):
            raise ValueError(f"unknown update mode {update_mode!r}")
        self.num_features = num_features
        self.num_actions = num_actions
        self.gamma = gamma
        self.num_planes = num_planes
        self.feature_bins = feature_bins
        self.update_mode = update_mode
        self.q_init = 1.0 / (1.0 - gamma)
        self.vaults = [
            Vault(num_planes, plane_shifts, feature_bins, num_actions, self.q_init, hash_kind)
            for _ in range(num_features)
        ]

    def _check_state(self, state: StateVector) -> None:
        if len(state.values) != self.num_features:
            raise ValueError(
                f"state has {len(state.values)} features, store has {self.num_features} vaults"
            )

    def q_value(self, state: StateVector, action: int) -> float:
        self._check_state(state)
        best = None
        for vault, value in zip(self.vaults, state.values):
            q = vault.q_value(value, action)
            if best is None or q > best:
                best = q
        return best

    def argmax_action(self, state: StateVector):
        """Scan all actions; returns (action_index, q_value), first maximizer wins ties."""
        self._check_state(state)
        # resolve plane rows once per vault, then walk actions
        rows = [vault.rows(value) for vault, value in zip(self.vaults, state.values)]
        best_action = 0
        best_q = None
        for a in range(self.num_actions):
            state_q = None
            for vault_rows in rows:
                vault_q = 0.0
                for row in vault_rows:
                    vault_q += row[a]
                if state_q is None or vault_q > state_q:
                    state_q = vault_q
            if best_q is None or state_q > best_q:
                best_q = state_q
                best_action = a
        return best_action, best_q

    def update(self, state: StateVector, action: int, delta: float) -> None:
        """Shift Q(state, action) by delta (split evenly across planes)."""
        self._check_state(state)
        share = delta / self.num_planes
        if self.update_mode == "all_vaults":
            targets = zip(self.vaults, state.values)
        else:
            best_i = 0
            best_q = None
            for i, (vault, value) in enumerate(zip(self.vaults, state.values)):
                q = vault.q_value(value, action)
                if best_q is None or q > best_q:
                    best_q = q
                    best_i = i
            targets = [(self.vaults[best_i], state.values[best_i])]
        for vault, value in targets:
            for row in vault.rows(value):
                row[action] += share

    def snapshot_rows(self):
        """Yield (vault, plane, bin, action, q) rows for dumping Q tables."""
        for vi, vault in enumerate(self.vaults):
            for pi, plane in enumerate(vault.planes):
                for b, row in enumerate(plane.table):
                    for a, q in enumerate(row):
                        yield vi, pi, b, a, q


@dataclass(frozen=True)
class StorageReport:
    """Hardware storage budget, in bits, per structure."""

    qvstore_bits: int
    eq_bits: int

    @property
    def qvstore_bytes(self) -> int:
        return self.qvstore_bits // 8

    @property
    def eq_bytes(self) -> int:
        return self.eq_bits // 8

    @property
    def total_bytes(self) -> int:
        return self.qvstore_bytes + self.eq_bytes

    @property
    def qvstore_kib(self) -> float:
        return self.qvstore_bytes / 1024

    @property
    def eq_kib(self) -> float:
        return self.eq_bytes / 1024

    @property
    def total_kib(self) -> float:
        return self.total_bytes / 1024

    def lines(self):
        yield f"qvstore: {self.qvstore_bytes} bytes ({self.qvstore_kib:g} KiB)"
        yield f"evalqueue: {self.eq_bytes} bytes ({self.eq_kib:g} KiB)"
        yield f"total: {self.total_bytes} bytes ({self.total_kib:g} KiB)"


def storage_report(num_features: int = 2, num_planes: int = 3, feature_bins: int = 128,
                   num_actions: int = 16, eq_entries: int = 256) -> StorageReport:
    """Bit cost of the hardware tables (the functional model uses wider numerics)."""
    qv_bits = num_features * num_planes * feature_bins * num_actions * QVALUE_BITS
    eq_entry_bits = (
        EQ_STATE_BITS + EQ_ACTION_BITS + EQ_REWARD_BITS + EQ_FILLED_BITS + EQ_ADDRESS_BITS
    )
    return StorageReport(qvstore_bits=qv_bits, eq_bits=eq_entries * eq_entry_bits)
