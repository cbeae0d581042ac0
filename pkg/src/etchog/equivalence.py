"""Key-derived feature permutation and exact invariance verification.

When the differencing grid, the histogram cell, and the cipher block all
share one side length, each cell of an encrypted image is some cell of
the plain image rotated/flipped/negated as a whole.  Negation flips the
sign of both differentials, which the unsigned direction ignores; a half
turn does the same; quarter turns shift every direction by pi/2, and
mirrors reflect it about pi/2.  Each of those moves is an exact
relabeling of histogram bins, so with one cell per normalization block
(block_size=1, overlap=0) the encrypted feature vector is exactly the
plain one with blocks shuffled and bins relabeled -- a permutation that
depends on the keys alone, never on the image.
"""

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .cipher import BlockTransform, CipherPlan, KeySet, apply_plan, derive_plan
from .hog import HogParams, extract, integer_vote_multiset, layout_for
from .image import validate_image


class EquivalenceConditionError(ValueError):
    """The parameter set does not support an exact feature permutation."""


@dataclass(frozen=True)
class FeaturePermutation:
    """Index bijection: encrypted_feature[indices[i]] == plain_feature[i]."""

    indices: np.ndarray

    def __len__(self) -> int:
        return self.indices.shape[0]

    def inverse(self) -> "FeaturePermutation":
        return FeaturePermutation(np.argsort(self.indices))


@dataclass(frozen=True)
class EquivalenceReport:
    max_rel_err: float
    exact_multiset: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.exact_multiset and self.max_rel_err <= self.tol


def bin_permutation(t: BlockTransform, bins: int) -> np.ndarray:
    """0-based bin relabeling induced by one block transform.

    A vote that lands in bin ``k`` of the plain cell lands in bin
    ``perm[k]`` of the transformed cell.  Negation and half turns are the
    identity; quarter turns shift by ``bins/2`` circularly (hence the
    even-bins requirement); mirrors reverse the bin order.
    """
    if bins < 2:
        raise ValueError(f"bins must be at least 2, got {bins}")
    k = np.arange(bins)
    if t.rotation % 2 == 1:
        if bins % 2 == 1:
            raise EquivalenceConditionError(
                f"quarter-turn rotations need an even bin count, got {bins}"
            )
        k = (k + bins // 2) % bins
    if t.hflip:
        k = (bins - 1) - k
    return k


def _check_conditions(plan: CipherPlan, shape: tuple[int, int], params: HogParams) -> None:
    problems = []
    if params.grid_size is None or params.grid_size != params.cell_size:
        problems.append(f"grid size {params.grid_size} must equal cell size {params.cell_size}")
    if params.block_size != 1:
        problems.append(f"block_size must be 1, got {params.block_size}")
    if params.overlap != 0:
        problems.append(f"overlap must be 0, got {params.overlap}")
    if params.bins % 2 == 1 and any(t.rotation % 2 == 1 for t in plan.transforms):
        problems.append(f"odd bin count {params.bins} with quarter-turn rotations in the plan")
    layout = layout_for(shape, params)
    if plan.num_blocks != layout.cells_x * layout.cells_y:
        problems.append(
            f"plan covers {plan.num_blocks} blocks but the image has "
            f"{layout.cells_x * layout.cells_y} cells (cipher block side must equal the grid side)"
        )
    if problems:
        raise EquivalenceConditionError("equivalence conditions not met: " + "; ".join(problems))


def feature_permutation(plan: CipherPlan, shape: tuple[int, int], params: HogParams) -> FeaturePermutation:
    """Derive, from the plan alone, the permutation relating the features."""
    _check_conditions(plan, shape, params)
    bins = params.bins
    length = plan.num_blocks * bins
    indices = np.empty(length, dtype=np.intp)
    offsets = np.arange(bins)
    for slot, src in enumerate(plan.permutation):
        relabel = bin_permutation(plan.transforms[slot], bins)
        indices[src * bins + offsets] = slot * bins + relabel
    return FeaturePermutation(indices)


def apply_permutation(feature: np.ndarray, perm: FeaturePermutation) -> np.ndarray:
    """Scatter a feature vector: out[perm[i]] = feature[i]."""
    feature = np.asarray(feature)
    if feature.shape != (len(perm),):
        raise ValueError(f"feature length {feature.shape} does not match permutation {len(perm)}")
    out = np.empty_like(feature)
    out[perm.indices] = feature
    return out


def relabel_multiset(cell: Counter, relabel: np.ndarray) -> Counter:
    """Apply a bin relabeling to one cell's exact vote multiset.

    Zero-strength entries keep their conventional bin: the bin of a
    weightless vote is arbitrary, so relabeling it would manufacture a
    spurious mismatch.
    """
    out: Counter = Counter()
    for (k, squared, fraction), count in cell.items():
        new_k = int(relabel[k - 1]) + 1 if squared > 0 else k
        out[(new_k, squared, fraction)] += count
    return out


def max_relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """Elementwise |a-b| / max(|a|,|b|), 0 where both sides are 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.abs(a), np.abs(b))
    err = np.abs(a - b) / np.where(scale > 0, scale, 1.0)
    return float(err.max()) if err.size else 0.0


def verify_equivalence(
    img: np.ndarray,
    keys: KeySet,
    params: HogParams,
    tol: float = 1e-9,
    quarter_turns: bool = True,
) -> EquivalenceReport:
    """Encrypt, extract both ways, and check the predicted permutation.

    The report carries (a) the max relative discrepancy between the
    encrypted-image feature and the permuted plain-image feature, and
    (b) whether every cell's exact vote multiset matches under the
    predicted bin relabeling -- the tolerance-free form of the claim.
    """
    img = validate_image(img)
    e = params.cell_size
    my, mx = img.shape[0] // e, img.shape[1] // e
    plan = derive_plan(keys, mx * my, quarter_turns=quarter_turns)
    _check_conditions(plan, img.shape, params)

    encrypted = apply_plan(img, plan, e)
    plain_feature = extract(img, params)
    encrypted_feature = extract(encrypted, params)
    perm = feature_permutation(plan, img.shape, params)
    predicted = apply_permutation(plain_feature, perm)
    max_rel = max_relative_error(encrypted_feature, predicted)

    plain_cells = integer_vote_multiset(img, params)
    encrypted_cells = integer_vote_multiset(encrypted, params)
    exact = True
    for slot, src in enumerate(plan.permutation):
        relabel = bin_permutation(plan.transforms[slot], params.bins)
        expected = relabel_multiset(plain_cells[(src // mx, src % mx)], relabel)
        if encrypted_cells[(slot // mx, slot % mx)] != expected:
            exact = False
            break
    return EquivalenceReport(max_rel_err=max_rel, exact_multiset=exact, tol=tol)
