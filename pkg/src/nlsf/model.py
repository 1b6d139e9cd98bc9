"""The nonlinear spectral filter model family.

A node-level filter analyzes the input signal into block-norm coefficients,
feeds them through a learned frequency-response network, and synthesizes the
response back to node space against the input's own normalized projections.
Because both analysis and synthesis see only eigenspace (or band)
projections, the whole map is independent of any eigenvector choice and
equivariant to the orthogonal operators that preserve those projections.

Graph-level filters skip synthesis and read the coefficient vector
directly; pooling filters read out node representations instead. All
gradients are computed by hand and validated against finite differences in
the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, DimensionMismatch
from .eig import SpectralBasis, dense_eig
from .filterbank import FilterBank, bank_for_basis
from .graph import GraphSignal, GsoKind, build_laplacian, channel_lp_norms  # noqa: F401
from .nn import MlpParams, init_mlp, mlp_backward, mlp_forward
from .spectral import BlockProjections, StabilityParams

MAX_FULL_RESPONSE = 1_000_000  # cap on psi output size for the full variant

VARIANTS = ("full", "diag", "leading_full", "leading_diag")
READOUTS = ("mean", "sum", "max", "lp")


@dataclass(frozen=True)
class BankSpec:
    kind: str = "dyadic"
    r: float = 0.5
    s: int = 4
    k: int = 4


@dataclass(frozen=True)
class NlsfConfig:
    """Architecture of one NLSF model.

    parameterization "index" retains the first ``j`` eigenspace projections;
    "value" retains the bands of ``bank``. Leading variants drop the
    complement block. ``hidden_dim`` is the node width between stacked
    layers; the final layer's head maps to the task output size.
    """

    parameterization: str = "index"
    j: int = 2
    bank: BankSpec = field(default_factory=BankSpec)
    variant: str = "diag"
    out_channels: int | None = None          # synthesis width d~ (full variants)
    stability: StabilityParams = field(default_factory=StabilityParams)
    layers: int = 1
    hidden_dim: int = 16
    psi_hidden: tuple = (32,)
    psi_activation: str = "relu"
    head_hidden: tuple = ()
    use_head: bool = True
    readout: str = "mean"
    readout_p: float = 1.0
    graph_head_hidden: tuple = (64, 32, 16)
    gso: GsoKind = GsoKind.COMBINATORIAL

    def __post_init__(self):
        if self.parameterization not in ("index", "value"):
            raise ConfigError(f"unknown parameterization {self.parameterization!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.readout not in READOUTS:
            raise ConfigError(f"unknown readout {self.readout!r}")
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")

    @property
    def leading(self) -> bool:
        return self.variant.startswith("leading")

    @property
    def diagonal(self) -> bool:
        return self.variant.endswith("diag")


def make_blocks(config: NlsfConfig, basis: SpectralBasis,
                bank: FilterBank | None = None) -> BlockProjections:
    """Resolve the block structure a model expects for a given basis."""
    if config.parameterization == "index":
        return BlockProjections.index(basis, config.j, config.leading)
    if bank is None:
        bank = bank_for_basis(basis, config.bank.kind, config.bank.s,
                              config.bank.k, config.bank.r)
    return BlockProjections.value(basis, bank, config.leading)


def prepare_context(g: GraphSignal, config: NlsfConfig) -> BlockProjections:
    """Laplacian, eigendecomposition, and block resolution for one graph."""
    basis = dense_eig(build_laplacian(g, config.gso))
    return make_blocks(config, basis)



def _mlp(sizes, activation, seed):
    # positive hidden bias keeps relu units alive on nonnegative coefficient inputs
    return init_mlp(sizes, activation=activation, seed=seed,
                    hidden_bias=0.05 if activation == "relu" else 0.0)


# ---------------------------------------------------------------------------
# One NLSF layer
# ---------------------------------------------------------------------------

class NlsfLayer:
    """Analysis -> frequency response -> synthesis -> optional node head."""

    def __init__(self, config: NlsfConfig, d_in: int, d_out: int, num_blocks: int,
                 seed: int, with_head: bool):
        self.config = config
        self.d_in = d_in
        self.num_blocks = num_blocks
        coeff_dim = num_blocks * d_in
        if config.diagonal:
            psi_out = coeff_dim
            self.d_tilde = d_in
            self.synth_dim = d_in
        else:
            self.d_tilde = config.out_channels or d_in
            psi_out = coeff_dim * num_blocks * self.d_tilde
            if psi_out > MAX_FULL_RESPONSE:
                raise ConfigError(
                    f"full frequency response would need {psi_out} outputs; "
                    "use the diag variant at this block count and width"
                )
            self.synth_dim = num_blocks * self.d_tilde
        self.psi = _mlp((coeff_dim, *config.psi_hidden, psi_out),
                        config.psi_activation, seed)
        self.head = None
        if with_head:
            self.head = _mlp((self.synth_dim, *config.head_hidden, d_out),
                             config.psi_activation, seed + 1)
        self.d_out = d_out if with_head else self.synth_dim

    def parameters(self) -> list:
        out = list(self.psi.params)
        if self.head is not None:
            out += self.head.params
        return out

    def forward(self, blocks_obj: BlockProjections, x: np.ndarray):
        sp = self.config.stability
        projections = blocks_obj.project(x)
        norms = np.stack([np.sqrt(np.sum(p * p, axis=0)) for p in projections])
        coeff = norms.reshape(1, -1)
        response, psi_tape = mlp_forward(self.psi, coeff)
        if sp.a == 0.0:
            powered = np.ones_like(norms)
        else:
            powered = np.where(norms > 0.0, norms, 1.0) ** sp.a
            powered = np.where(norms > 0.0, powered, 0.0)
        denom = powered + sp.e
        if np.any(denom == 0.0):
            raise DataError("zero block norm with e=0 in synthesis")
        b, d = norms.shape
        if self.config.diagonal:
            r = response.reshape(b, d)
            theta = np.zeros_like(x)
            for i, p in enumerate(projections):
                theta += (r[i] / denom[i])[None, :] * p
        else:
            r = response.reshape(b * d, b * self.d_tilde)
            h = np.hstack([p / denom[i][None, :] for i, p in enumerate(projections)])
            theta = h @ r
        head_tape = None
        out = theta
        if self.head is not None:
            out, head_tape = mlp_forward(self.head, theta)
        cache = (blocks_obj, x, projections, norms, denom, psi_tape, r, out, theta,
                 head_tape)
        return out, cache

    def backward(self, cache, gout: np.ndarray):
        (blocks_obj, x, projections, norms, denom, psi_tape, r, _, theta,
         head_tape) = cache
        sp = self.config.stability
        b, d = norms.shape
        head_grads = []
        gtheta = np.asarray(gout, dtype=np.float64)
        if self.head is not None:
            head_grads, gtheta = mlp_backward(self.head, head_tape, gout)
        if self.config.diagonal:
            gr = np.zeros((b, d))
            gp = [None] * b
            gdenom = np.zeros((b, d))
            for i, p in enumerate(projections):
                gr[i] = np.sum(gtheta * p, axis=0) / denom[i]
                gp[i] = (r[i] / denom[i])[None, :] * gtheta
                gdenom[i] = -r[i] * np.sum(gtheta * p, axis=0) / (denom[i] ** 2)
            gresponse = gr.reshape(1, -1)
        else:
            h = np.hstack([p / denom[i][None, :] for i, p in enumerate(projections)])
            gr_mat = h.T @ gtheta
            gh = gtheta @ r.T
            gp = [None] * b
            gdenom = np.zeros((b, d))
            for i, p in enumerate(projections):
                sl = gh[:, i * d:(i + 1) * d]
                gp[i] = sl / denom[i][None, :]
                gdenom[i] = -np.sum(sl * p, axis=0) / (denom[i] ** 2)
            gresponse = gr_mat.reshape(1, -1)
        psi_grads, gcoeff = mlp_backward(self.psi, psi_tape, gresponse)
        gnorms = gcoeff.reshape(b, d)
        # denominator path: d(denom)/d(norm) = a * norm^(a-1) where norm > 0
        if sp.a > 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                dpow = np.where(norms > 0.0, sp.a * norms ** (sp.a - 1.0), 0.0)
            gnorms = gnorms + gdenom * dpow
        gx = np.zeros_like(np.asarray(x, dtype=np.float64))
        for i, p in enumerate(projections):
            gp_total = gp[i].copy()
            with np.errstate(divide="ignore", invalid="ignore"):
                unit = np.where(norms[i][None, :] > 0.0, p / norms[i][None, :], 0.0)
            gp_total += gnorms[i][None, :] * unit
            gx += blocks_obj.project_single(i, gp_total)
        return psi_grads + head_grads, gx


# ---------------------------------------------------------------------------
# Node-level model (stack of layers)
# ---------------------------------------------------------------------------

class NodeNlsf:
    """Stacked node-level NLSF; every layer re-analyzes its own input
    against the fixed spectral blocks of the graph."""

    def __init__(self, config: NlsfConfig, d_in: int, d_out: int, num_blocks: int,
                 seed: int = 0):
        self.config = config
        self.layers = []
        width = d_in
        for ell in range(config.layers):
            last = ell == config.layers - 1
            target = d_out if last else config.hidden_dim
            layer = NlsfLayer(config, width, target, num_blocks,
                              seed=seed + 101 * ell, with_head=config.use_head)
            self.layers.append(layer)
            width = layer.d_out
        self.d_out = width

    def parameters(self) -> list:
        return [p for layer in self.layers for p in layer.parameters()]

    def forward(self, blocks_obj: BlockProjections, x: np.ndarray):
        caches = []
        h = np.asarray(x, dtype=np.float64)
        if h.ndim == 1:
            h = h[:, None]
        for layer in self.layers:
            h, cache = layer.forward(blocks_obj, h)
            caches.append(cache)
        return h, caches

    def backward(self, caches, gout: np.ndarray):
        grads_rev = []
        g = gout
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            layer_grads, g = layer.backward(cache, g)
            grads_rev.append(layer_grads)
        grads = []
        for layer_grads in reversed(grads_rev):
            grads.extend(layer_grads)
        return grads, g


def node_nlsf(model: NodeNlsf, blocks_obj: BlockProjections, x: np.ndarray) -> np.ndarray:
    out, _ = model.forward(blocks_obj, x)
    return out


# ---------------------------------------------------------------------------
# Graph-level model (fully spectral)
# ---------------------------------------------------------------------------

class GraphNlsf:
    """Frequency-response network applied directly to the coefficient vector."""

    def __init__(self, config: NlsfConfig, d_in: int, d_out: int, num_blocks: int,
                 seed: int = 0):
        self.config = config
        coeff_dim = num_blocks * d_in
        self.psi_hat = _mlp((coeff_dim, *config.graph_head_hidden, d_out),
                            config.psi_activation, seed)

    def parameters(self) -> list:
        return list(self.psi_hat.params)

    def forward(self, blocks_obj: BlockProjections, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        projections = blocks_obj.project(x)
        norms = np.stack([np.sqrt(np.sum(p * p, axis=0)) for p in projections])
        out, tape = mlp_forward(self.psi_hat, norms.reshape(1, -1))
        return out[0], tape

    def backward(self, cache, gout: np.ndarray):
        grads, _ = mlp_backward(self.psi_hat, cache, np.atleast_2d(gout))
        return grads


def graph_nlsf(model: GraphNlsf, blocks_obj: BlockProjections, x: np.ndarray) -> np.ndarray:
    out, _ = model.forward(blocks_obj, x)
    return out


# ---------------------------------------------------------------------------
# Pooling model (node-level + readout + classifier head)
# ---------------------------------------------------------------------------

def _readout_forward(z: np.ndarray, kind: str, p: float):
    n = z.shape[0]
    if kind == "mean":
        return z.mean(axis=0)
    if kind == "sum":
        return z.sum(axis=0)
    if kind == "max":
        return z.max(axis=0)
    if kind == "lp":
        return channel_lp_norms(z, p, normalized=True)
    raise ConfigError(f"unknown readout {kind!r}")


def _readout_backward(z: np.ndarray, kind: str, p: float, pooled: np.ndarray,
                      g: np.ndarray) -> np.ndarray:
    n = z.shape[0]
    if kind == "mean":
        return np.tile(g / n, (n, 1))
    if kind == "sum":
        return np.tile(g, (n, 1))
    if kind == "max":
        out = np.zeros_like(z)
        idx = np.argmax(z, axis=0)
        out[idx, np.arange(z.shape[1])] = g
        return out
    if kind == "lp":
        # m = ((1/n) sum |z|^p)^(1/p); dm/dz = sign(z) |z|^(p-1) m^(1-p) / n
        out = np.zeros_like(z)
        for c in range(z.shape[1]):
            m = pooled[c]
            if m <= 0.0:
                continue
            out[:, c] = (g[c] / n) * np.sign(z[:, c]) * np.abs(z[:, c]) ** (p - 1.0) \
                * m ** (1.0 - p)
        return out
    raise ConfigError(f"unknown readout {kind!r}")


class PoolingNlsf:
    """Node-level NLSF, ReLU, node-set readout, then a classifier MLP."""

    def __init__(self, config: NlsfConfig, d_in: int, d_out: int, num_blocks: int,
                 seed: int = 0):
        self.config = config
        self.node = NodeNlsf(config, d_in, config.hidden_dim, num_blocks, seed=seed)
        self.graph_head = _mlp((self.node.d_out, *config.graph_head_hidden, d_out),
                               config.psi_activation, seed + 7)

    def parameters(self) -> list:
        return self.node.parameters() + list(self.graph_head.params)

    def forward(self, blocks_obj: BlockProjections, x: np.ndarray):
        node_out, node_cache = self.node.forward(blocks_obj, x)
        z = np.maximum(node_out, 0.0)
        pooled = _readout_forward(z, self.config.readout, self.config.readout_p)
        out, head_tape = mlp_forward(self.graph_head, pooled[None, :])
        return out[0], (node_cache, node_out, z, pooled, head_tape)

    def backward(self, cache, gout: np.ndarray):
        node_cache, node_out, z, pooled, head_tape = cache
        head_grads, gpooled = mlp_backward(self.graph_head, head_tape,
                                           np.atleast_2d(gout))
        gz = _readout_backward(z, self.config.readout, self.config.readout_p,
                               pooled, gpooled[0])
        gnode = gz * (node_out > 0.0)
        node_grads, gx = self.node.backward(node_cache, gnode)
        return node_grads + head_grads, gx


def pooling_nlsf(model: PoolingNlsf, blocks_obj: BlockProjections, x: np.ndarray) -> np.ndarray:
    out, _ = model.forward(blocks_obj, x)
    return out


# ---------------------------------------------------------------------------
# Laplacian attention
# ---------------------------------------------------------------------------

class AttentionNlsf:
    """Softmax-weighted concatenation of an index branch on the combinatorial
    Laplacian and a value branch on the normalized Laplacian.

    The two learned logits produce alpha in [0, 1]; the branch outputs are
    scaled by alpha and 1 - alpha and concatenated. An optional linear
    output head maps the concatenation to the task width.
    """

    def __init__(self, index_config: NlsfConfig, value_config: NlsfConfig,
                 d_in: int, branch_dim: int, num_blocks_pair: tuple,
                 d_out: int | None = None, seed: int = 0):
        if index_config.gso is not GsoKind.COMBINATORIAL:
            raise ConfigError("the index branch binds to the combinatorial Laplacian")
        if value_config.gso is not GsoKind.NORMALIZED:
            raise ConfigError("the value branch binds to the normalized Laplacian")
        self.index_branch = NodeNlsf(index_config, d_in, branch_dim,
                                     num_blocks_pair[0], seed=seed)
        self.value_branch = NodeNlsf(value_config, d_in, branch_dim,
                                     num_blocks_pair[1], seed=seed + 1)
        if self.index_branch.d_out != self.value_branch.d_out:
            raise DimensionMismatch("attention branches must share an output width")
        self.logits = np.zeros(2)
        self.out_head = None
        if d_out is not None:
            self.out_head = init_mlp((2 * self.index_branch.d_out, d_out),
                                     activation="identity", seed=seed + 2)

    def parameters(self) -> list:
        out = self.index_branch.parameters() + self.value_branch.parameters()
        out.append(self.logits)
        if self.out_head is not None:
            out += self.out_head.params
        return out

    def alpha(self) -> float:
        z = self.logits - self.logits.max()
        e = np.exp(z)
        return float(e[0] / e.sum())

    def forward(self, blocks_pair: tuple, x: np.ndarray):
        bi, bv = blocks_pair
        a_out, a_cache = self.index_branch.forward(bi, x)
        v_out, v_cache = self.value_branch.forward(bv, x)
        alpha = self.alpha()
        concat = np.hstack([alpha * a_out, (1.0 - alpha) * v_out])
        head_tape = None
        out = concat
        if self.out_head is not None:
            out, head_tape = mlp_forward(self.out_head, concat)
        return out, (a_cache, v_cache, a_out, v_out, alpha, head_tape)

    def backward(self, cache, gout: np.ndarray):
        a_cache, v_cache, a_out, v_out, alpha, head_tape = cache
        head_grads = []
        gconcat = gout
        if self.out_head is not None:
            head_grads, gconcat = mlp_backward(self.out_head, head_tape, gout)
        w = a_out.shape[1]
        ga_scaled = gconcat[:, :w]
        gv_scaled = gconcat[:, w:]
        a_grads, gx_a = self.index_branch.backward(a_cache, alpha * ga_scaled)
        v_grads, gx_v = self.value_branch.backward(v_cache, (1.0 - alpha) * gv_scaled)
        galpha = float(np.sum(ga_scaled * a_out) - np.sum(gv_scaled * v_out))
        glogits = galpha * alpha * (1.0 - alpha) * np.array([1.0, -1.0])
        grads = a_grads + v_grads + [glogits] + head_grads
        return grads, gx_a + gx_v


def laplacian_attention(model: AttentionNlsf, blocks_pair: tuple, x: np.ndarray) -> np.ndarray:
    out, _ = model.forward(blocks_pair, x)
    return out


# ---------------------------------------------------------------------------
# Symmetry-breaking witness and the pooling expressivity construction
# ---------------------------------------------------------------------------

@dataclass
class WitnessReport:
    found: bool
    violation: float
    shift: np.ndarray | None
    signal: np.ndarray | None
    samples_used: int


def relu_symmetry_break_witness(basis: SpectralBasis, seed: int = 0,
                                budget: int = 100, threshold: float = 1e-3) -> WitnessReport:
    """Search for a shift U and signal x with ReLU(Q U x) != U ReLU(Q x).

    Q is a random linear spectral response (constant within each eigenspace,
    as functional calculus requires), so the linear part commutes with every
    sampled U; any violation above the threshold is caused by the
    activation alone.
    """
    from .verify import sample_functional_shift

    if basis.num_groups < 2:
        raise DataError("need at least two distinct eigenspaces for a witness search")
    rng = np.random.default_rng(seed)
    n = basis.eigenvectors.shape[0]
    response = rng.uniform(0.5, 2.0, size=basis.num_groups)
    q_mat = np.zeros((n, n))
    for i, (start, stop) in enumerate(basis.groups):
        v = basis.eigenvectors[:, start:stop]
        q_mat += response[i] * (v @ v.T)
    best = 0.0
    for t in range(budget):
        u = sample_functional_shift(basis, seed=seed + 7919 * (t + 1),
                                    j=basis.num_groups).u
        x = rng.standard_normal((n, 1))
        lhs = np.maximum(q_mat @ (u @ x), 0.0)
        rhs = u @ np.maximum(q_mat @ x, 0.0)
        violation = float(np.linalg.norm(lhs - rhs))
        if violation > max(best, threshold):
            return WitnessReport(True, violation, u, x, t + 1)
        best = max(best, violation)
    return WitnessReport(False, best, None, None, budget)


@dataclass
class ExpressivityWitness:
    coefficients_a: np.ndarray
    coefficients_b: np.ndarray
    pooled_a: float
    pooled_b: float


def pooling_expressivity_witness() -> ExpressivityWitness:
    """Two graph-signals indistinguishable by coefficient vectors yet split
    by an L1 pooling readout.

    Uses the 1/n-normalized L1 signal norm throughout (analysis, synthesis
    denominators, and readout). Both signals live in the span of the first
    two eigenspaces, have coefficients (1, 1), and pool to 1 and 4/3.
    """
    from .datasets import path_graph

    two = dense_eig(build_laplacian(path_graph(2)))
    three = dense_eig(build_laplacian(path_graph(3)))
    x_a = np.array([2.0, 0.0])[:, None]          # (1,1) + (1,-1)
    x_b = np.array([2.5, 1.0, -0.5])[:, None]    # (1,1,1) + 1.5*(1,0,-1)

    def coeffs_and_pool(basis, x):
        n = x.shape[0]
        theta = np.zeros_like(x)
        coeffs = []
        for i in range(2):
            v = basis.group_columns(i)
            p = v @ (v.T @ x)
            c = float(np.abs(p).sum() / n)
            coeffs.append(c)
            # response c^a + e with a=1, e=0 cancels the denominator exactly
            theta += c * p / c
        pooled = float(np.abs(theta).sum() / n)
        return np.array(coeffs), pooled

    ca, pa = coeffs_and_pool(two, x_a)
    cb, pb = coeffs_and_pool(three, x_b)
    return ExpressivityWitness(ca, cb, pa, pb)
