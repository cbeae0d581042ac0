"""Binary soft-margin SVM trained by SMO, with one-vs-rest multiclass.

The trainer solves the usual dual (maximize sum(alpha) - 1/2 a'Qa with
0 <= alpha <= C and sum(alpha*y) = 0) by repeatedly updating the
maximally KKT-violating pair, which makes it deterministic: ties are
broken by a seeded scan order, and convergence is declared when the
violation gap drops below ``kkt_tol``.  Kernels are linear dot products
or Gaussian exp(-gamma * squared distance).  Everything here is plain
numpy at desk scale; the full kernel matrix is cached up to 4096 points.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .prng import permutation

_CACHE_LIMIT = 4096


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "gaussian"):
            raise ValueError(f"kernel kind must be 'linear' or 'gaussian', got {self.kind!r}")
        if self.kind == "gaussian" and (self.gamma is None or not self.gamma > 0):
            raise ValueError(f"gaussian kernel needs gamma > 0, got {self.gamma}")


def default_gamma(num_features: int) -> float:
    return 1.0 / num_features


@dataclass(frozen=True)
class TrainConfig:
    c: float = 1.0
    kkt_tol: float = 1e-3
    max_passes: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"C must be positive, got {self.c}")
        if not self.kkt_tol > 0:
            raise ValueError(f"kkt_tol must be positive, got {self.kkt_tol}")


@dataclass
class SvmModel:
    """Trained binary machine: decision(x) = sum_i alphas[i]*K(sv[i], x) + bias.

    ``alphas`` are the signed products alpha_i * y_i of the support
    vectors only.
    """

    support_vectors: np.ndarray
    alphas: np.ndarray
    bias: float
    kernel: KernelSpec


@dataclass
class MultiModel:
    """One-vs-rest ensemble; ``models[i]`` separates ``classes[i]`` from the rest."""

    classes: list
    models: list = field(default_factory=list)


def kernel_eval(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"kernel needs two equal-length vectors, got {a.shape} and {b.shape}")
    if spec.kind == "linear":
        return float(np.dot(a, b))
    diff = a - b
    return float(np.exp(-spec.gamma * np.dot(diff, diff)))


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All pairwise kernel values, shape (len(a), len(b))."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"expected 2-D feature arrays with a shared width, got {a.shape} and {b.shape}")
    prod = a @ b.T
    if spec.kind == "linear":
        return prod
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * prod
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-spec.gamma * sq)


def train_binary_smo(x: np.ndarray, y: np.ndarray, cfg: TrainConfig, kernel: KernelSpec) -> SvmModel:
    """Fit the dual to ``kkt_tol`` by maximal-violating-pair SMO."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError(f"expected (n, d) features and (n,) labels, got {x.shape} and {y.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("training needs at least one example of each label")

    n = x.shape[0]
    c = cfg.c
    if n <= _CACHE_LIMIT:
        cache = kernel_matrix(kernel, x, x)
        row = cache.__getitem__
    else:
        rows: dict[int, np.ndarray] = {}

        def row(i: int) -> np.ndarray:
            if i not in rows:
                rows[i] = kernel_matrix(kernel, x[i : i + 1], x)[0]
            return rows[i]

    scan = np.array(permutation(n, cfg.seed), dtype=np.intp)
    alphas = np.zeros(n)
    gradient = np.zeros(n)  # G_t = sum_j alpha_j y_j K(t, j)

    converged = False
    for _ in range(cfg.max_passes):
        minus_e = y - gradient
        up = ((y > 0) & (alphas < c)) | ((y < 0) & (alphas > 0))
        low = ((y < 0) & (alphas < c)) | ((y > 0) & (alphas > 0))
        up_vals = np.where(up[scan], minus_e[scan], -np.inf)
        low_vals = np.where(low[scan], minus_e[scan], np.inf)
        i = int(scan[np.argmax(up_vals)])
        j = int(scan[np.argmin(low_vals)])
        if minus_e[i] - minus_e[j] <= cfg.kkt_tol:
            converged = True
            break

        ki, kj = row(i), row(j)
        eta = ki[i] + kj[j] - 2.0 * ki[j]
        if eta <= 0.0:
            eta = 1e-12
        e_i, e_j = -minus_e[i], -minus_e[j]
        ai_old, aj_old = alphas[i], alphas[j]
        if y[i] != y[j]:
            lo, hi = max(0.0, aj_old - ai_old), min(c, c + aj_old - ai_old)
        else:
            lo, hi = max(0.0, ai_old + aj_old - c), min(c, ai_old + aj_old)
        snap = 1e-12 * c  # round float dust onto the exact box bounds
        aj_new = min(max(aj_old + y[j] * (e_i - e_j) / eta, lo), hi)
        if aj_new < snap:
            aj_new = 0.0
        elif aj_new > c - snap:
            aj_new = c
        if aj_new == aj_old:
            warnings.warn("SMO stalled on a clipped pair before reaching kkt_tol", stacklevel=2)
            break
        ai_new = min(max(ai_old + y[i] * y[j] * (aj_old - aj_new), 0.0), c)
        if ai_new < snap:
            ai_new = 0.0
        elif ai_new > c - snap:
            ai_new = c
        gradient += ki * ((ai_new - ai_old) * y[i]) + kj * ((aj_new - aj_old) * y[j])
        alphas[i], alphas[j] = ai_new, aj_new
    else:
        warnings.warn(f"SMO hit max_passes={cfg.max_passes} before reaching kkt_tol", stacklevel=2)

    minus_e = y - gradient
    up = ((y > 0) & (alphas < c)) | ((y < 0) & (alphas > 0))
    low = ((y < 0) & (alphas < c)) | ((y > 0) & (alphas > 0))
    if converged or (up.any() and low.any()):
        bias = (minus_e[up].max() + minus_e[low].min()) / 2.0
    else:  # degenerate: everything pinned on one side
        bias = float(minus_e.mean())

    support = alphas > 0
    return SvmModel(
        support_vectors=np.ascontiguousarray(x[support]),
        alphas=alphas[support] * y[support],
        bias=float(bias),
        kernel=kernel,
    )


def decision(model: SvmModel, x: np.ndarray) -> float | np.ndarray:
    """Decision value(s); accepts one vector or a stack of them."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    queries = x[None, :] if single else x
    if model.support_vectors.shape[0] == 0:
        values = np.full(queries.shape[0], model.bias)
    else:
        if queries.shape[1] != model.support_vectors.shape[1]:
            raise ValueError(
                f"query length {queries.shape[1]} does not match model "
                f"{model.support_vectors.shape[1]}"
            )
        values = kernel_matrix(model.kernel, queries, model.support_vectors) @ model.alphas + model.bias
    return float(values[0]) if single else values


def dual_objective(model_alphas: np.ndarray, y: np.ndarray, kmat: np.ndarray) -> float:
    """sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij (for diagnostics)."""
    ay = model_alphas * y
    return float(model_alphas.sum() - 0.5 * ay @ kmat @ ay)


def train_one_vs_rest(x: np.ndarray, labels, cfg: TrainConfig, kernel: KernelSpec) -> MultiModel:
    labels = list(labels)
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise ValueError(f"one-vs-rest needs at least 2 classes, got {len(classes)}")
    x = np.asarray(x, dtype=np.float64)
    multi = MultiModel(classes=classes)
    label_arr = np.array(labels)
    for cls in classes:
        y = np.where(label_arr == cls, 1.0, -1.0)
        multi.models.append(train_binary_smo(x, y, cfg, kernel))
    return multi


def scores(multi: MultiModel, x: np.ndarray) -> np.ndarray:
    """Per-class decision values, shape (n_queries, n_classes)."""
    x = np.asarray(x, dtype=np.float64)
    queries = x[None, :] if x.ndim == 1 else x
    return np.stack([decision(m, queries) for m in multi.models], axis=1)


def predict(multi: MultiModel, x: np.ndarray) -> list:
    s = scores(multi, x)
    return [multi.classes[k] for k in np.argmax(s, axis=1)]


MODEL_MAGIC = "ETCSVM v1"


def save_model(model: SvmModel, path) -> None:
    """Versioned text format: magic, kernel, bias, one support vector per line."""
    kernel_line = "kernel linear" if model.kernel.kind == "linear" else f"kernel gaussian {model.kernel.gamma:.16e}"
    lines = [MODEL_MAGIC, kernel_line, f"b {model.bias:.16e}"]
    for alpha, sv in zip(model.alphas, model.support_vectors):
        lines.append(f"{alpha:.16e} " + " ".join(f"{v:.16e}" for v in sv))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> SvmModel:
    with open(path, "r", encoding="ascii") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValueError(f"not an {MODEL_MAGIC} model file")
    kernel_tokens = lines[1].split()
    if kernel_tokens[:2] == ["kernel", "linear"]:
        kernel = KernelSpec("linear")
    elif kernel_tokens[:2] == ["kernel", "gaussian"]:
        kernel = KernelSpec("gaussian", gamma=float(kernel_tokens[2]))
    else:
        raise ValueError(f"unrecognized kernel line {lines[1]!r}")
    if not lines[2].startswith("b "):
        raise ValueError("missing bias line")
    bias = float(lines[2].split()[1])
    alphas, vectors = [], []
    for line in lines[3:]:
        values = [float(tok) for tok in line.split()]
        alphas.append(values[0])
        vectors.append(values[1:])
    width = len(vectors[0]) if vectors else 0
    return SvmModel(
        support_vectors=np.array(vectors, dtype=np.float64).reshape(len(vectors), width),
        alphas=np.array(alphas, dtype=np.float64),
        bias=bias,
        kernel=kernel,
    )
