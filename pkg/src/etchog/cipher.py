"""Key-driven block cipher: permute blocks, rotate/flip, negate.

Encryption splits an image into E x E blocks, rearranges them with a
keyed Fisher-Yates permutation, applies a keyed dihedral transform
(rotation then optional horizontal mirror) to each block, and finally
flips intensities (p -> 255 - p) per block with probability 1/2.

The plan derived from a :class:`KeySet` is a pure function of the keys
and the block count, with a fixed draw order: the permutation stream is
exhausted first, then one draw per block decides rotation/flip, then one
draw per block decides negation, blocks in raster order.  Each key seeds
its own SplitMix64 stream.
"""

from dataclasses import dataclass

import numpy as np

from .image import merge_blocks, split_blocks, validate_image
from .prng import MASK64, SplitMix64


@dataclass(frozen=True)
class KeySet:
    """Three independent 64-bit seeds: permutation, geometry, negation."""

    k1: int
    k2: int
    k3: int

    def __post_init__(self):
        for name in ("k1", "k2", "k3"):
            value = getattr(self, name)
            if not 0 <= value <= MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")


@dataclass(frozen=True)
class BlockTransform:
    """One dihedral element plus a negation flag.

    ``rotation`` counts quarter-turns counter-clockwise; ``hflip`` mirrors
    horizontally after the rotation.  Together they range over the 8
    symmetries of the square.
    """

    rotation: int
    hflip: bool
    negate: bool

    def __post_init__(self):
        if self.rotation not in (0, 1, 2, 3):
            raise ValueError(f"rotation must be 0..3 quarter-turns, got {self.rotation}")


IDENTITY_TRANSFORM = BlockTransform(rotation=0, hflip=False, negate=False)


@dataclass(frozen=True)
class CipherPlan:
    """Resolved per-image cipher: output slot j holds input block permutation[j]."""

    permutation: tuple[int, ...]
    transforms: tuple[BlockTransform, ...]

    def __post_init__(self):
        m = len(self.permutation)
        if m == 0:
            raise ValueError("plan must cover at least one block")
        if len(self.transforms) != m:
            raise ValueError("one transform per block required")
        if sorted(self.permutation) != list(range(m)):
            raise ValueError("permutation must be a bijection on block indices")

    @property
    def num_blocks(self) -> int:
        return len(self.permutation)


def identity_plan(m: int) -> CipherPlan:
    return CipherPlan(tuple(range(m)), (IDENTITY_TRANSFORM,) * m)


def derive_plan(keys: KeySet, m: int, quarter_turns: bool = True) -> CipherPlan:
    """Derive the cipher plan for ``m`` blocks from the key set.

    With ``quarter_turns=False`` rotations are restricted to {0, 180}
    degrees (bit 1 of the geometry draw is ignored), which keeps the
    feature equivalence exact for odd histogram bin counts.
    """
    if m < 1:
        raise ValueError(f"block count must be at least 1, got {m}")
    perm = list(range(m))
    SplitMix64(keys.k1).shuffle(perm)
    geometry = SplitMix64(keys.k2)
    negation = SplitMix64(keys.k3)
    geo_draws = [geometry.next_u64() for _ in range(m)]
    neg_draws = [negation.next_u64() for _ in range(m)]
    transforms = []
    for g, r in zip(geo_draws, neg_draws):
        rotation = (g & 3) if quarter_turns else (g & 1) * 2
        transforms.append(BlockTransform(rotation=rotation, hflip=bool((g >> 2) & 1), negate=bool(r & 1)))
    return CipherPlan(tuple(perm), tuple(transforms))


def apply_transform(block: np.ndarray, t: BlockTransform) -> np.ndarray:
    """Apply the geometric part of a transform (rotation, then mirror)."""
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise ValueError(f"blocks must be square, got shape {block.shape}")
    out = np.rot90(block, t.rotation)
    if t.hflip:
        out = out[:, ::-1]
    return np.ascontiguousarray(out)


def invert_transform(block: np.ndarray, t: BlockTransform) -> np.ndarray:
    """Undo :func:`apply_transform` (mirror first, then rotate back)."""
    out = block[:, ::-1] if t.hflip else block
    return np.ascontiguousarray(np.rot90(out, -t.rotation))


def negate_block(block: np.ndarray, r: bool) -> np.ndarray:
    """Negative-positive transform: p' = 255 - p when ``r`` is set."""
    return (255 - block).astype(np.uint8) if r else np.asarray(block, dtype=np.uint8)


def apply_plan(img: np.ndarray, plan: CipherPlan, e: int) -> np.ndarray:
    """Encrypt with an explicit plan (split, permute, transform, negate, merge)."""
    img = validate_image(img)
    blocks = split_blocks(img, e)
    if blocks.shape[0] != plan.num_blocks:
        raise ValueError(f"plan covers {plan.num_blocks} blocks but image has {blocks.shape[0]}")
    out = np.empty_like(blocks)
    for j, src in enumerate(plan.permutation):
        t = plan.transforms[j]
        out[j] = negate_block(apply_transform(blocks[src], t), t.negate)
    my, mx = img.shape[0] // e, img.shape[1] // e
    return merge_blocks(out, mx, my)


def invert_plan(img: np.ndarray, plan: CipherPlan, e: int) -> np.ndarray:
    """Exact inverse of :func:`apply_plan`."""
    img = validate_image(img)
    blocks = split_blocks(img, e)
    if blocks.shape[0] != plan.num_blocks:
        raise ValueError(f"plan covers {plan.num_blocks} blocks but image has {blocks.shape[0]}")
    out = np.empty_like(blocks)
    for j, src in enumerate(plan.permutation):
        t = plan.transforms[j]
        out[src] = invert_transform(negate_block(blocks[j], t.negate), t)
    my, mx = img.shape[0] // e, img.shape[1] // e
    return merge_blocks(out, mx, my)


def _plan_for(img: np.ndarray, keys: KeySet, e: int, quarter_turns: bool) -> CipherPlan:
    img = validate_image(img)
    height, width = img.shape
    if e < 1 or height % e or width % e:
        from .image import DimensionError

        raise DimensionError(f"block side {e} does not divide image {width}x{height}")
    return derive_plan(keys, (height // e) * (width // e), quarter_turns=quarter_turns)


def encrypt(img: np.ndarray, keys: KeySet, e: int, quarter_turns: bool = True) -> np.ndarray:
    """Encrypt an image; deterministic in (img, keys, e)."""
    return apply_plan(img, _plan_for(img, keys, e, quarter_turns), e)


def decrypt(img: np.ndarray, keys: KeySet, e: int, quarter_turns: bool = True) -> np.ndarray:
    """Invert :func:`encrypt` byte-exactly under the same keys."""
    return invert_plan(img, _plan_for(img, keys, e, quarter_turns), e)
