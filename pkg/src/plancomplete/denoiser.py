"""Structure-conditioned corner denoiser with masked attention.

Every room is four corner tokens. Each attention block mixes tokens through
four attentions whose outputs are summed:

* CSA: corners of the same room,
* GSA: all corners,
* RCA: corners of other rooms joined by a door,
* SCA: room corners (queries) attending to encoded wall endpoints.

Sampling runs continuous DDPM steps on the corner coordinates and then a
short discrete phase on their 8-bit binary codes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
from sklearn.base import BaseEstimator

from .checkpoint import load_tensors, save_tensors
from .geometry import DegenerateGeometryError, FloorPlan, Room, RotatedRect, min_rotated_rect
from .graph import AccessGraph, LabelVocabulary, default_vocabulary
from .skeleton import WallSet

DTYPE = torch.float64
CORNERS = 4
MASK_KINDS = ("csa", "gsa", "rca", "sca")


@dataclass
class DenoiserConfig:
    model_dim: int = 128
    num_blocks: int = 4
    encoder_layers: int = 2
    ff_mult: int = 2
    bits: int = 8
    rca_types: tuple = ("door",)

    def __post_init__(self):
        self.rca_types = tuple(self.rca_types)
        if self.model_dim < 1 or self.num_blocks < 1 or self.encoder_layers < 0 or self.bits < 1:
            raise ValueError("model sizes must be positive")


# ---------------------------------------------------------------------------
# schedule and forward process


@dataclass
class DiffusionSchedule:
    T: int
    T_discrete: int
    alpha_bar: np.ndarray  # length T + 1, alpha_bar[0] == 1

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=float)
        if len(ab) != self.T + 1:
            raise ValueError("alpha_bar must have T + 1 entries")
        if ab[0] != 1.0 or not (np.diff(ab) < 0).all() or ab[-1] <= 0:
            raise ValueError("alpha_bar must start at 1 and decrease strictly inside (0, 1]")
        if not 0 <= self.T_discrete <= self.T:
            raise ValueError("T_discrete must be within [0, T]")
        self.alpha_bar = ab

    @classmethod
    def cosine(cls, T: int = 1000, T_discrete: int = 32, s: float = 0.008, max_beta: float = 0.999):
        if T < 1:
            raise ValueError("T must be >= 1")
        f = np.cos((np.arange(T + 1) / T + s) / (1 + s) * np.pi / 2) ** 2
        betas = np.clip(1 - f[1:] / f[:-1], 0, max_beta)
        alpha_bar = np.concatenate([[1.0], np.cumprod(1 - betas)])
        return cls(T, T_discrete, alpha_bar)

    def alpha(self, t: int) -> float:
        return self.alpha_bar[t] / self.alpha_bar[t - 1]

    def posterior(self, t: int):
        """Coefficients ``(c_x0, c_xt, variance)`` of q(x_{t-1} | x_t, x_0)."""
        ab, ab_prev = self.alpha_bar[t], self.alpha_bar[t - 1]
        beta = 1 - ab / ab_prev
        c0 = math.sqrt(ab_prev) * beta / (1 - ab)
        ct = math.sqrt(ab / ab_prev) * (1 - ab_prev) / (1 - ab)
        var = beta * (1 - ab_prev) / (1 - ab)
        return c0, ct, var


def add_noise(coords, t: int, schedule: DiffusionSchedule, seed=None, noise=None):
    """``x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps`` with seeded Gaussian ``eps``."""
    if not 0 <= t <= schedule.T:
        raise ValueError(f"t must be in [0, {schedule.T}]")
    x0 = torch.as_tensor(coords, dtype=DTYPE)
    if noise is None:
        gen = torch.Generator().manual_seed(0 if seed is None else int(seed))
        noise = torch.randn(x0.shape, generator=gen, dtype=DTYPE)
    ab = schedule.alpha_bar[t]
    if t == 0:
        return x0.clone()
    return math.sqrt(ab) * x0 + math.sqrt(1 - ab) * noise


def quantize(coords, bits: int = 8) -> torch.Tensor:
    """``[-1, 1]`` -> integer codes ``0 .. 2**bits - 1``."""
    levels = 2**bits - 1
    return torch.round((torch.clamp(coords, -1, 1) + 1) / 2 * levels).to(torch.int64)


def dequantize(codes, bits: int = 8) -> torch.Tensor:
    return codes.to(DTYPE) / (2**bits - 1) * 2 - 1


def to_bits(codes, bits: int = 8) -> torch.Tensor:
    """Integer codes ``(..., 2)`` -> ``(..., 2 * bits)`` binary, most significant bit first."""
    shifts = torch.arange(bits - 1, -1, -1)
    return ((codes[..., None] >> shifts) & 1).reshape(*codes.shape[:-1], -1)


def from_bits(b, bits: int = 8) -> torch.Tensor:
    weights = 2 ** torch.arange(bits - 1, -1, -1)
    return (b.reshape(*b.shape[:-1], -1, bits).to(torch.int64) * weights).sum(-1)


# ---------------------------------------------------------------------------
# masks


@dataclass
class AttentionMaskSet:
    csa: torch.Tensor
    gsa: torch.Tensor
    rca: torch.Tensor
    sca: torch.Tensor

    def permute_rooms(self, perm) -> "AttentionMaskSet":
        idx = corner_permutation(perm)
        return AttentionMaskSet(self.csa[idx][:, idx], self.gsa[idx][:, idx], self.rca[idx][:, idx], self.sca[idx])


def corner_permutation(room_perm) -> torch.Tensor:
    room_perm = torch.as_tensor(room_perm, dtype=torch.int64)
    return (room_perm[:, None] * CORNERS + torch.arange(CORNERS)).reshape(-1)


def build_masks(n_rooms: int, door_pairs, wall_count: int) -> AttentionMaskSet:
    """Boolean masks for ``4 * n_rooms`` room corners and ``wall_count`` structural corners."""
    if n_rooms < 1:
        raise ValueError("need at least one room")
    room_of = torch.arange(n_rooms).repeat_interleave(CORNERS)
    same = room_of[:, None] == room_of[None, :]
    doors = torch.zeros(n_rooms, n_rooms, dtype=torch.bool)
    for a, b in door_pairs:
        if a != b:
            doors[a, b] = doors[b, a] = True
    rca = doors[room_of][:, room_of] & ~same
    r = n_rooms * CORNERS
    return AttentionMaskSet(same, torch.ones(r, r, dtype=torch.bool), rca, torch.ones(r, wall_count, dtype=torch.bool))


def masked_attention(q, k, v, mask) -> torch.Tensor:
    """Scaled dot-product attention restricted to ``mask``; all-masked rows give zeros.

    Masked-out keys receive an exact zero weight and never enter the row
    maximum, so their values cannot leak into the output.
    """
    for t in (q, k, v):
        if not torch.isfinite(t).all():
            raise FloatingPointError("non-finite attention input")
    return _masked_attention(q, k, v, torch.as_tensor(mask, dtype=torch.bool))


def _masked_attention(q, k, v, mask):
    if k.shape[0] == 0:
        return torch.zeros(q.shape[0], v.shape[1], dtype=v.dtype)
    scores = q @ k.T / math.sqrt(q.shape[1])
    neg = torch.full_like(scores, -torch.inf)
    peak = torch.where(mask, scores, neg).amax(dim=1, keepdim=True)
    peak = torch.where(torch.isfinite(peak), peak, torch.zeros_like(peak))
    ex = torch.where(mask, torch.exp(scores - peak), torch.zeros_like(scores))
    denom = ex.sum(dim=1, keepdim=True)
    weights = ex / torch.where(denom > 0, denom, torch.ones_like(denom))
    return weights @ v


# ---------------------------------------------------------------------------
# parameters


def init_params(config: DenoiserConfig, n_room_types: int, seed: int = 0) -> dict:
    gen = torch.Generator().manual_seed(seed)
    d, f = config.model_dim, config.model_dim * config.ff_mult

    def lin(out_dim, in_dim):
        bound = math.sqrt(6.0 / (in_dim + out_dim))
        return (torch.rand(out_dim, in_dim, generator=gen, dtype=DTYPE) * 2 - 1) * bound

    def zeros(*shape):
        return torch.zeros(*shape, dtype=DTYPE)

    def small(*shape):
        return (torch.rand(*shape, generator=gen, dtype=DTYPE) * 2 - 1) * 0.1

    p = {
        "room_in.weight": lin(d, 2 + n_room_types + CORNERS),
        "room_in.bias": small(d),
        "time.w1": lin(d, d),
        "time.b1": small(d),
        "time.w2": lin(d, d),
        "time.b2": small(d),
        "struct_in.weight": lin(d, 6),
        "struct_in.bias": small(d),
        "struct_norm.g": torch.ones(d, dtype=DTYPE),
        "struct_norm.b": zeros(d),
        "out_norm.g": torch.ones(d, dtype=DTYPE),
        "out_norm.b": zeros(d),
        "eps_head.weight": lin(2, d),
        "eps_head.bias": zeros(2),
        "bits_head.weight": lin(2 * config.bits, d),
        "bits_head.bias": zeros(2 * config.bits),
    }

    def attn(prefix):
        for name in ("q", "k", "v", "o"):
            p[f"{prefix}.{name}"] = lin(d, d)

    def norm(prefix):
        p[f"{prefix}.g"] = torch.ones(d, dtype=DTYPE)
        p[f"{prefix}.b"] = zeros(d)

    def ff(prefix):
        p[f"{prefix}.w1"] = lin(f, d)
        p[f"{prefix}.b1"] = small(f)
        p[f"{prefix}.w2"] = lin(d, f)
        p[f"{prefix}.b2"] = small(d)

    for k in range(config.encoder_layers):
        norm(f"enc{k}.ln1")
        attn(f"enc{k}.attn")
        norm(f"enc{k}.ln2")
        ff(f"enc{k}.ff")
    for k in range(config.num_blocks):
        norm(f"blk{k}.ln1")
        norm(f"blk{k}.ln_s")
        for kind in MASK_KINDS:
            attn(f"blk{k}.{kind}")
        norm(f"blk{k}.ln2")
        ff(f"blk{k}.ff")
    return p


def _ln(x, p, prefix):
    return torch.nn.functional.layer_norm(x, x.shape[-1:], p[f"{prefix}.g"], p[f"{prefix}.b"])


def _ff(x, p, prefix):
    h = torch.nn.functional.gelu(x @ p[f"{prefix}.w1"].T + p[f"{prefix}.b1"])
    return h @ p[f"{prefix}.w2"].T + p[f"{prefix}.b2"]


def _attn(xq, xkv, mask, p, prefix):
    q = xq @ p[f"{prefix}.q"].T
    k = xkv @ p[f"{prefix}.k"].T
    v = xkv @ p[f"{prefix}.v"].T
    return _masked_attention(q, k, v, mask) @ p[f"{prefix}.o"].T


def time_embedding(t: int, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=DTYPE) / max(half, 1))
    ang = t * freqs
    emb = torch.cat([torch.sin(ang), torch.cos(ang)])
    return torch.nn.functional.pad(emb, (0, dim - emb.shape[0]))


# ---------------------------------------------------------------------------
# forward


def structural_tokens(walls: WallSet) -> torch.Tensor:
    """Per wall endpoint: own coords, the opposite endpoint's coords, and which end it is."""
    seg = torch.as_tensor(walls.segments, dtype=DTYPE).reshape(-1, 2, 2)
    if seg.shape[0] == 0:
        return torch.zeros(0, 6, dtype=DTYPE)
    own = seg.reshape(-1, 2)
    other = seg.flip(1).reshape(-1, 2)
    end = torch.eye(2, dtype=DTYPE).repeat(seg.shape[0], 1)
    return torch.cat([own, other, end], dim=1)


def structural_encode(walls: WallSet, params: dict, config: DenoiserConfig) -> torch.Tensor:
    """``(2K, model_dim)`` encoded wall-endpoint tokens; full self-attention among them."""
    feats = structural_tokens(walls)
    s = feats @ params["struct_in.weight"].T + params["struct_in.bias"]
    if s.shape[0] == 0:
        return s
    full = torch.ones(s.shape[0], s.shape[0], dtype=torch.bool)
    for k in range(config.encoder_layers):
        hn = _ln(s, params, f"enc{k}.ln1")
        s = s + _attn(hn, hn, full, params, f"enc{k}.attn")
        s = s + _ff(_ln(s, params, f"enc{k}.ln2"), params, f"enc{k}.ff")
    return _ln(s, params, "struct_norm")


@dataclass
class DenoiserState:
    """Room-corner tokens: coords ``(4n, 2)``, room-type index per room ``(n,)``."""

    coords: torch.Tensor
    room_types: torch.Tensor

    @property
    def n_rooms(self) -> int:
        return int(self.room_types.shape[0])

    def room_index(self) -> torch.Tensor:
        return torch.arange(self.n_rooms).repeat_interleave(CORNERS)

    def corner_index(self) -> torch.Tensor:
        return torch.arange(CORNERS).repeat(self.n_rooms)

    def permute_rooms(self, perm) -> "DenoiserState":
        perm = torch.as_tensor(perm, dtype=torch.int64)
        return DenoiserState(self.coords[corner_permutation(perm)], self.room_types[perm])


def room_features(state: DenoiserState, n_room_types: int) -> torch.Tensor:
    types = torch.nn.functional.one_hot(state.room_types, n_room_types).to(DTYPE).repeat_interleave(CORNERS, 0)
    corners = torch.nn.functional.one_hot(state.corner_index(), CORNERS).to(DTYPE)
    return torch.cat([state.coords, types, corners], dim=1)


def denoise_step(state: DenoiserState, t: int, walls_encoded, masks: AttentionMaskSet, params: dict, config: DenoiserConfig, schedule: DiffusionSchedule):
    """Model output at step ``t``.

    Returns predicted noise ``(4n, 2)`` in the continuous phase
    (``t > T_discrete``) and per-bit logits ``(4n, 2 * bits)`` in the
    discrete phase.
    """
    if not 1 <= t <= schedule.T:
        raise ValueError(f"t must be in [1, {schedule.T}]")
    r = state.coords.shape[0]
    if r != state.n_rooms * CORNERS:
        raise ValueError("coords must hold four corners per room")
    s = walls_encoded.shape[0]
    if masks.csa.shape != (r, r) or masks.rca.shape != (r, r) or masks.gsa.shape != (r, r) or masks.sca.shape != (r, s):
        raise ValueError("attention masks do not match token counts")
    if not (torch.isfinite(state.coords).all() and torch.isfinite(walls_encoded).all()):
        raise FloatingPointError("non-finite denoiser input")
    n_types = params["room_in.weight"].shape[1] - 2 - CORNERS
    h = room_features(state, n_types) @ params["room_in.weight"].T + params["room_in.bias"]
    temb = time_embedding(t, h.shape[1])
    temb = torch.nn.functional.silu(temb @ params["time.w1"].T + params["time.b1"]) @ params["time.w2"].T + params["time.b2"]
    h = h + temb
    for k in range(config.num_blocks):
        hn = _ln(h, params, f"blk{k}.ln1")
        mix = _attn(hn, hn, masks.csa, params, f"blk{k}.csa")
        mix = mix + _attn(hn, hn, masks.gsa, params, f"blk{k}.gsa")
        mix = mix + _attn(hn, hn, masks.rca, params, f"blk{k}.rca")
        if s:
            sn = _ln(walls_encoded, params, f"blk{k}.ln_s")
            mix = mix + _attn(hn, sn, masks.sca, params, f"blk{k}.sca")
        h = h + mix
        h = h + _ff(_ln(h, params, f"blk{k}.ln2"), params, f"blk{k}.ff")
    h = _ln(h, params, "out_norm")
    if t > schedule.T_discrete:
        return h @ params["eps_head.weight"].T + params["eps_head.bias"]
    return h @ params["bits_head.weight"].T + params["bits_head.bias"]


# ---------------------------------------------------------------------------
# sampling


def order_ccw(corners: np.ndarray) -> np.ndarray:
    c = corners.mean(axis=0)
    ang = np.arctan2(corners[:, 1] - c[1], corners[:, 0] - c[0])
    return corners[np.argsort(ang, kind="stable")]


def _fit_rectangle(corners: np.ndarray, min_side: float) -> np.ndarray:
    """Rectangle through four sampled corners, kept inside ``[-1, 1]^2``."""
    try:
        rect = min_rotated_rect(corners).corners
        if np.linalg.norm(rect[1] - rect[0]) < min_side or np.linalg.norm(rect[2] - rect[1]) < min_side:
            raise DegenerateGeometryError("collapsed room")
    except DegenerateGeometryError:
        c = np.clip(corners.mean(axis=0), -1 + min_side, 1 - min_side)
        h = min_side / 2
        rect = c + np.array([[-h, -h], [h, -h], [h, h], [-h, h]])
    centre = rect.mean(axis=0)
    reach = np.abs(rect - centre).max(axis=0)
    room = 1 - np.abs(centre)
    scale = np.min(np.where(reach > 0, room / np.maximum(reach, 1e-300), np.inf))
    if scale < 1:
        rect = centre + (rect - centre) * scale
    rect = np.clip(rect, -1, 1)
    return order_ccw(rect)


def sample_coords(graph: AccessGraph, walls: WallSet, params: dict, config: DenoiserConfig, schedule: DiffusionSchedule, seed: int = 0, vocab: LabelVocabulary | None = None, trace=None):
    """Run the reverse process; returns final corner coords ``(4n, 2)``."""
    vocab = vocab or default_vocabulary()
    n = len(graph)
    rt_pos = {r: i for i, r in enumerate(vocab.room_types)}
    try:
        types = torch.tensor([rt_pos[node.room_type] for node in graph.nodes], dtype=torch.int64)
    except KeyError as exc:
        raise ValueError(f"graph node without a known room type: {exc}") from exc
    walls_encoded = structural_encode(walls, params, config)
    masks = build_masks(n, graph.door_pairs(config.rca_types), walls_encoded.shape[0])
    gen = torch.Generator().manual_seed(int(seed))
    x = torch.randn(n * CORNERS, 2, generator=gen, dtype=DTYPE)
    with torch.no_grad():
        for t in range(schedule.T, schedule.T_discrete, -1):
            eps = denoise_step(DenoiserState(x, types), t, walls_encoded, masks, params, config, schedule)
            ab = schedule.alpha_bar[t]
            x0 = torch.clamp((x - math.sqrt(1 - ab) * eps) / math.sqrt(ab), -1, 1)
            c0, ct, var = schedule.posterior(t)
            x = c0 * x0 + ct * x
            if t > 1:
                x = x + math.sqrt(var) * torch.randn(x.shape, generator=gen, dtype=DTYPE)
            if trace is not None:
                trace.append((t, x.clone()))
        if schedule.T_discrete > 0:
            x = dequantize(quantize(x, config.bits), config.bits)
        for t in range(schedule.T_discrete, 0, -1):
            logits = denoise_step(DenoiserState(x, types), t, walls_encoded, masks, params, config, schedule)
            x0 = dequantize(from_bits((logits > 0).to(torch.int64), config.bits), config.bits)
            if t > 1:
                c0, ct, var = schedule.posterior(t)
                x = c0 * x0 + ct * x + math.sqrt(var) * torch.randn(x.shape, generator=gen, dtype=DTYPE)
                x = dequantize(quantize(x, config.bits), config.bits)
            else:
                x = x0
            if trace is not None:
                trace.append((t, x.clone()))
    return torch.clamp(x, -1, 1)


def sample(graph: AccessGraph, walls: WallSet, params: dict, config: DenoiserConfig, schedule: DiffusionSchedule, seed: int = 0, vocab: LabelVocabulary | None = None) -> FloorPlan:
    """Sample one floor plan: four counter-clockwise rectangle corners per room."""
    x = sample_coords(graph, walls, params, config, schedule, seed, vocab).numpy()
    min_side = 2.0 / (2**config.bits - 1)
    rooms = []
    for i, node in enumerate(graph.nodes):
        corners = order_ccw(x[i * CORNERS : (i + 1) * CORNERS])
        rect = RotatedRect(_fit_rectangle(corners, min_side))
        rooms.append(Room(rect.to_polygon(), node.room_type, node.id))
    return FloorPlan(rooms, walls)


# ---------------------------------------------------------------------------
# training harness


def training_loss(params, example, t: int, config: DenoiserConfig, schedule: DiffusionSchedule, noise, vocab=None):
    """Noise-prediction MSE (continuous ``t``) or bit cross-entropy (discrete ``t``).

    ``example`` is ``(graph, walls, coords)`` with ``coords`` the ``(4n, 2)``
    ground-truth corners.
    """
    graph, walls, coords = example
    vocab = vocab or default_vocabulary()
    rt_pos = {r: i for i, r in enumerate(vocab.room_types)}
    types = torch.tensor([rt_pos[n.room_type] for n in graph.nodes], dtype=torch.int64)
    x0 = torch.as_tensor(coords, dtype=DTYPE)
    xt = add_noise(x0, t, schedule, noise=noise)
    enc = structural_encode(walls, params, config)
    masks = build_masks(len(graph), graph.door_pairs(config.rca_types), enc.shape[0])
    if t > schedule.T_discrete:
        eps = denoise_step(DenoiserState(xt, types), t, enc, masks, params, config, schedule)
        return torch.mean((eps - noise) ** 2)
    xt = dequantize(quantize(xt, config.bits), config.bits)
    logits = denoise_step(DenoiserState(xt, types), t, enc, masks, params, config, schedule)
    target = to_bits(quantize(x0, config.bits), config.bits).to(DTYPE)
    return torch.nn.functional.binary_cross_entropy_with_logits(logits, target)


def rooms_to_coords(graph: AccessGraph) -> np.ndarray:
    """Ground-truth training targets: MRR corners of each node polygon, CCW."""
    out = []
    for node in graph.nodes:
        if node.polygon is None:
            raise ValueError(f"node {node.id} has no polygon")
        out.append(order_ccw(min_rotated_rect(np.asarray(node.polygon)).corners))
    return np.concatenate(out)


def save_model(path, params: dict, config: DenoiserConfig, schedule: DiffusionSchedule, vocab: LabelVocabulary) -> None:
    meta = {
        "kind": "denoiser",
        "config": asdict(config),
        "schedule": {"T": schedule.T, "T_discrete": schedule.T_discrete},
        "vocab": vocab.to_dict(),
    }
    save_tensors(path, params, meta)


def load_model(path):
    """Return ``(params, config, schedule, vocab)``."""
    arrays, meta = load_tensors(path)
    if meta.get("kind") != "denoiser":
        raise ValueError(f"{path} is not a denoiser checkpoint")
    config = DenoiserConfig(**meta["config"])
    vocab = LabelVocabulary.from_dict(meta["vocab"])
    schedule = DiffusionSchedule.cosine(meta["schedule"]["T"], meta["schedule"]["T_discrete"])
    params = {k: torch.as_tensor(v, dtype=DTYPE) for k, v in arrays.items()}
    expected = init_params(config, len(vocab.room_types))
    for k, t in expected.items():
        if k not in params or params[k].shape != t.shape:
            raise ValueError(f"{path}: tensor {k!r} missing or mis-shaped")
    return params, config, schedule, vocab


class FloorPlanDenoiser(BaseEstimator):
    """Estimator wrapper: ``fit`` runs the optional training harness, ``sample`` generates plans."""

    def __init__(
        self,
        model_dim=128,
        num_blocks=4,
        encoder_layers=2,
        ff_mult=2,
        bits=8,
        rca_types=("door",),
        steps=1000,
        discrete_steps=32,
        learning_rate=1e-4,
        n_iter=0,
        seed=0,
        vocab=None,
    ):
        self.model_dim = model_dim
        self.num_blocks = num_blocks
        self.encoder_layers = encoder_layers
        self.ff_mult = ff_mult
        self.bits = bits
        self.rca_types = rca_types
        self.steps = steps
        self.discrete_steps = discrete_steps
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.seed = seed
        self.vocab = vocab

    def _setup(self):
        self.vocab_ = self.vocab or default_vocabulary()
        self.config_ = DenoiserConfig(self.model_dim, self.num_blocks, self.encoder_layers, self.ff_mult, self.bits, self.rca_types)
        self.schedule_ = DiffusionSchedule.cosine(self.steps, self.discrete_steps)
        self.params_ = init_params(self.config_, len(self.vocab_.room_types), self.seed)

    def fit(self, X=None, y=None):
        """Initialise parameters, then take ``n_iter`` Adam steps over ``X``.

        ``X`` holds ``(graph, walls)`` pairs whose graph nodes carry polygons.
        """
        self._setup()
        X = list(X or [])
        if self.n_iter and not X:
            raise ValueError("training needs examples")
        self.loss_curve_ = []
        if not self.n_iter:
            return self
        examples = [(g, w, rooms_to_coords(g)) for g, w in X]
        rng = np.random.default_rng(self.seed)
        gen = torch.Generator().manual_seed(self.seed)
        params = {k: v.clone().requires_grad_(True) for k, v in self.params_.items()}
        opt = torch.optim.Adam(params.values(), lr=self.learning_rate)
        for _ in range(self.n_iter):
            ex = examples[int(rng.integers(len(examples)))]
            t = int(rng.integers(1, self.schedule_.T + 1))
            noise = torch.randn(ex[2].shape, generator=gen, dtype=DTYPE)
            opt.zero_grad()
            loss = training_loss(params, ex, t, self.config_, self.schedule_, noise, self.vocab_)
            loss.backward()
            opt.step()
            self.loss_curve_.append(loss.item())
        self.params_ = {k: v.detach() for k, v in params.items()}
        return self

    def sample(self, graph: AccessGraph, walls: WallSet, seed: int = 0) -> FloorPlan:
        if not hasattr(self, "params_"):
            from sklearn.exceptions import NotFittedError

            raise NotFittedError("call fit() first (n_iter=0 gives random parameters)")
        return sample(graph, walls, self.params_, self.config_, self.schedule_, seed, self.vocab_)

    def save(self, path) -> None:
        save_model(path, self.params_, self.config_, self.schedule_, self.vocab_)

    @classmethod
    def load(cls, path) -> "FloorPlanDenoiser":
        params, config, schedule, vocab = load_model(path)
        est = cls(
            model_dim=config.model_dim,
            num_blocks=config.num_blocks,
            encoder_layers=config.encoder_layers,
            ff_mult=config.ff_mult,
            bits=config.bits,
            rca_types=config.rca_types,
            steps=schedule.T,
            discrete_steps=schedule.T_discrete,
            vocab=vocab,
        )
        est.vocab_, est.config_, est.schedule_, est.params_ = vocab, config, schedule, params
        return est
