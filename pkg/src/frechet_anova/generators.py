"""
Samplers for the simulation scenarios.

Each generator takes a :class:`~frechet_anova.distributions.RandomStream`
and returns an :class:`~frechet_anova.spaces.ObjectSample`; :func:`generate`
builds a two-group :class:`~frechet_anova.ksample.GroupedSample` from a
:class:`ScenarioSpec`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .distributions import RandomStream, as_stream
from .exceptions import InputError
from .ksample import GroupedSample
from .spaces import MatrixKind, ObjectSample, midpoint_grid

# hyper-variances of the random mean in the two distribution scenarios
LOCATION_MU_VAR = 0.5
SCALE_MU_VAR = 0.2
BA_REFERENCE_GAMMA = 2.5


def gen_gaussian_qd_sample(n: int, mu_mean: float, mu_sd: float, grid_size: int = 100,
                           stream=None) -> ObjectSample:
    """
    Quantile grids of ``N(mu_i, 1)`` with random ``mu_i ~ N(mu_mean, mu_sd^2)``.

    The grids are exact: row ``i`` is ``mu_i + z`` where ``z`` holds the
    standard normal quantiles on the midpoint grid.
    """
    if mu_sd < 0:
        raise InputError("mu_sd must be non-negative")
    stream = as_stream(stream)
    z = special.ndtri(midpoint_grid(grid_size))
    mu = mu_mean + mu_sd * stream.normal(n)
    return ObjectSample.quantiles(mu[:, None] + z[None, :], validate=False)


def ba_attractiveness(gamma: float, edges_per_step: int) -> float:
    """Initial attractiveness giving tail exponent ``3 + a / edges_per_step = gamma``."""
    return edges_per_step * (gamma - 3.0)


def ba_edges(nodes: int, gamma: float, edges_per_step: int, stream: RandomStream) -> np.ndarray:
    """
    Edge list of one preferential-attachment graph with tunable degree exponent.

    Starts from a clique on ``edges_per_step + 1`` nodes; every later node
    links to ``edges_per_step`` distinct existing nodes chosen with
    probability proportional to ``degree + a``. When every candidate weight
    is zero the choice is uniform.

    Returns
    -------
    ndarray of shape (E, 2)
        Pairs ``(new node, existing node)``, clique edges first.
    """
    m = edges_per_step
    a = ba_attractiveness(gamma, m)
    deg = np.zeros(nodes)
    deg[: m + 1] = m
    edges = [(i, j) for i in range(m + 1) for j in range(i)]
    uniforms = iter(stream.uniform((nodes - m - 1) * m))
    for new in range(m + 1, nodes):
        weights = np.maximum(deg[:new] + a, 0.0)
        taken = np.zeros(new, dtype=bool)
        for _ in range(m):
            if not np.any(weights > 0):
                # no attractive candidate left: choose uniformly among the rest
                weights = (~taken).astype(float)
            cum = np.cumsum(weights)
            pick = int(min(np.searchsorted(cum, next(uniforms) * cum[-1], side="right"), new - 1))
            taken[pick] = True
            weights[pick] = 0.0
        targets = np.flatnonzero(taken)
        edges.extend((new, int(t)) for t in targets)
        deg[targets] += 1
        deg[new] = m
    return np.array(edges, dtype=int).reshape(-1, 2)


def ba_adjacency(nodes: int, gamma: float, edges_per_step: int, stream: RandomStream) -> np.ndarray:
    """Dense 0/1 adjacency matrix of :func:`ba_edges`."""
    e = ba_edges(nodes, gamma, edges_per_step, stream)
    adj = np.zeros((nodes, nodes))
    adj[e[:, 0], e[:, 1]] = adj[e[:, 1], e[:, 0]] = 1.0
    return adj


def gen_ba_laplacian_sample(n: int, nodes: int = 10, gamma: float = 2.5, edges_per_step: int = 1,
                            stream=None) -> ObjectSample:
    """
    Graph Laplacians of ``n`` scale-free networks.

    Parameters
    ----------
    n : int
        Number of networks.
    nodes : int
        Nodes per network, at least 3.
    gamma : float
        Target degree exponent in ``[2, 3.5]``.
    edges_per_step : int
        Edges added with each new node; must be below ``nodes``.
    stream : RandomStream or int
    """
    if nodes < 3:
        raise InputError(f"need at least 3 nodes, got {nodes}")
    if not 2.0 <= gamma <= 3.5:
        raise InputError(f"gamma must lie in [2, 3.5], got {gamma}")
    if edges_per_step < 1 or edges_per_step >= nodes:
        raise InputError(f"edges_per_step must lie in [1, nodes - 1], got {edges_per_step}")
    stream = as_stream(stream)
    laps = np.empty((n, nodes, nodes))
    for i in range(n):
        w = ba_adjacency(nodes, gamma, edges_per_step, stream)
        laps[i] = np.diag(w.sum(axis=1)) - w
    return ObjectSample.matrices(laps, MatrixKind.LAPLACIAN)


def gen_truncated_mvt_sample(n: int, dim: int = 5, dof: Optional[float] = None, bound: float = 5.0,
                             stream=None) -> ObjectSample:
    """
    Vectors from ``N(0, I)`` (``dof`` None or infinite) or ``t_dof(0, I)``
    restricted to the box ``[-bound, bound]^dim``.

    Vectors with any coordinate outside the box are redrawn whole, which
    samples the truncated joint law.
    """
    if dim < 1:
        raise InputError("dim must be at least 1")
    if not bound > 0:
        raise InputError("bound must be positive")
    if dof is not None and not dof > 0:
        raise InputError("degrees of freedom must be positive")
    stream = as_stream(stream)
    normal = dof is None or math.isinf(dof)
    out = np.empty((0, dim))
    while len(out) < n:
        need = n - len(out)
        batch = max(16, int(need * 1.5) + 8)
        z = stream.normal((batch, dim))
        if not normal:
            z = z / np.sqrt(stream.chisquare(dof, (batch, 1)) / dof)
        inside = np.all(np.abs(z) <= bound, axis=1)
        out = np.vstack([out, z[inside][:need]])
    return ObjectSample.vectors(out, validate=False)


def gen_beta_vector_sample(n: int, dim: int = 5, beta: float = 1.0, stream=None) -> ObjectSample:
    """Vectors with independent ``Beta(beta, beta)`` coordinates."""
    if not beta > 0:
        raise InputError("beta must be positive")
    stream = as_stream(stream)
    return ObjectSample.vectors(stream.beta(beta, beta, (n, dim)), validate=False)


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

class ScenarioKind(str, enum.Enum):
    DISTRIBUTION_LOCATION = "distribution_location"
    DISTRIBUTION_SCALE = "distribution_scale"
    BA_NETWORK = "ba_network"
    TRUNCATED_MVT = "truncated_mvt"
    BETA_VECTOR = "beta_vector"


NULL_PARAMETER = {
    ScenarioKind.DISTRIBUTION_LOCATION: 0.0,
    ScenarioKind.DISTRIBUTION_SCALE: 1.0,
    ScenarioKind.BA_NETWORK: BA_REFERENCE_GAMMA,
    ScenarioKind.TRUNCATED_MVT: math.inf,
    ScenarioKind.BETA_VECTOR: 1.0,
}


@dataclass
class ScenarioSpec:
    """
    Two-group simulation design.

    Group 1 always follows the reference law of the scenario; group 2 is
    shifted by ``param``:

    ========================  =====================================  ==========================
    kind                      group 1                                group 2
    ========================  =====================================  ==========================
    distribution_location     N(mu, 1), mu ~ N(0, 0.5)               mu ~ N(param, 0.5)
    distribution_scale        N(mu, 1), mu ~ N(0, 0.2)               mu ~ N(0, 0.2 * param)
    ba_network                exponent 2.5                           exponent param
    truncated_mvt             truncated N(0, I)                      truncated t_param(0, I)
    beta_vector               Beta(1, 1) coordinates                 Beta(param, param)
    ========================  =====================================  ==========================

    The second argument of ``N(., .)`` is a variance. ``mu_sd`` overrides
    the group 1 hyper standard deviation of the distribution scenarios.
    """

    kind: ScenarioKind
    param: float
    sizes: tuple = (100, 100)
    grid_size: int = 100
    nodes: int = 10
    edges_per_step: int = 1
    dim: int = 5
    bound: float = 5.0
    mu_sd: Optional[float] = None

    def __post_init__(self):
        self.kind = ScenarioKind(self.kind)
        self.sizes = tuple(int(s) for s in self.sizes)
        if len(self.sizes) != 2 or min(self.sizes) < 2:
            raise InputError("a scenario needs two groups of at least 2 objects")
        self.param = float(self.param)

    @property
    def null_param(self) -> float:
        return NULL_PARAMETER[self.kind]

    def with_param(self, param) -> "ScenarioSpec":
        values = asdict(self)
        values["param"] = param
        return ScenarioSpec(**values)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["sizes"] = list(self.sizes)
        return d


def generate(spec: ScenarioSpec, stream=None) -> GroupedSample:
    """Draw one two-group data set for ``spec``."""
    stream = as_stream(stream)
    n1, n2 = spec.sizes
    kind, p = spec.kind, spec.param
    if kind is ScenarioKind.DISTRIBUTION_LOCATION:
        sd = math.sqrt(LOCATION_MU_VAR) if spec.mu_sd is None else spec.mu_sd
        g1 = gen_gaussian_qd_sample(n1, 0.0, sd, spec.grid_size, stream)
        g2 = gen_gaussian_qd_sample(n2, p, sd, spec.grid_size, stream)
    elif kind is ScenarioKind.DISTRIBUTION_SCALE:
        if p <= 0:
            raise InputError("the scale ratio must be positive")
        var = SCALE_MU_VAR if spec.mu_sd is None else spec.mu_sd ** 2
        g1 = gen_gaussian_qd_sample(n1, 0.0, math.sqrt(var), spec.grid_size, stream)
        g2 = gen_gaussian_qd_sample(n2, 0.0, math.sqrt(var * p), spec.grid_size, stream)
    elif kind is ScenarioKind.BA_NETWORK:
        g1 = gen_ba_laplacian_sample(n1, spec.nodes, BA_REFERENCE_GAMMA, spec.edges_per_step, stream)
        g2 = gen_ba_laplacian_sample(n2, spec.nodes, p, spec.edges_per_step, stream)
    elif kind is ScenarioKind.TRUNCATED_MVT:
        g1 = gen_truncated_mvt_sample(n1, spec.dim, None, spec.bound, stream)
        g2 = gen_truncated_mvt_sample(n2, spec.dim, p, spec.bound, stream)
    elif kind is ScenarioKind.BETA_VECTOR:
        g1 = gen_beta_vector_sample(n1, spec.dim, 1.0, stream)
        g2 = gen_beta_vector_sample(n2, spec.dim, p, stream)
    else:  # pragma: no cover
        raise InputError(f"unknown scenario {kind}")
    return GroupedSample.from_groups([g1, g2])
