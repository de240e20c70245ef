"""
Symmetry Schema Module - Declarative layout of permutable, rotatable and invariant indices
"""
import json
from pathlib import Path
from typing import List, Tuple, Union
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.exceptions import SchemaError

logger = logging.getLogger(__name__)

IndexPair = Tuple[int, int]


def _block_indices(block: IndexPair) -> List[int]:
    return list(range(block[0], block[1]))


class SymmetrySchema(BaseModel):
    """
    Where the N-fold rotation acts on state and action vectors

    Finger blocks are half-open (start, stop) ranges, one per angular slot,
    slot i at angle i * 360/N. Finger blocks, planar_xy_pairs and
    invariant_indices partition the state vector; action blocks partition
    the action vector. The *_xy_offsets list (x, y) offsets inside every
    finger block that rotate together with the scene (empty for joint-space
    robot states).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    order: int = Field(default=3, ge=1)
    state_dim: int = Field(ge=1)
    action_dim: int = Field(ge=1)
    finger_state_blocks: List[IndexPair]
    finger_action_blocks: List[IndexPair]
    finger_state_xy_offsets: List[IndexPair] = Field(default_factory=list)
    finger_action_xy_offsets: List[IndexPair] = Field(default_factory=list)
    planar_xy_pairs: List[IndexPair] = Field(default_factory=list)
    invariant_indices: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_layout(self) -> "SymmetrySchema":
        n = self.order
        if len(self.finger_state_blocks) != n:
            raise ValueError(f"expected {n} finger_state_blocks, got {len(self.finger_state_blocks)}")
        if len(self.finger_action_blocks) != n:
            raise ValueError(f"expected {n} finger_action_blocks, got {len(self.finger_action_blocks)}")

        for name, blocks in (("finger_state_blocks", self.finger_state_blocks),
                             ("finger_action_blocks", self.finger_action_blocks)):
            lengths = {stop - start for start, stop in blocks}
            if any(stop <= start for start, stop in blocks):
                raise ValueError(f"{name} must be non-empty (start, stop) ranges")
            if len(lengths) != 1:
                raise ValueError(f"{name} must all have the same length, got {sorted(lengths)}")

        state_cover = [i for block in self.finger_state_blocks for i in _block_indices(block)]
        state_cover += [i for pair in self.planar_xy_pairs for i in pair]
        state_cover += list(self.invariant_indices)
        _check_partition("state", state_cover, self.state_dim)

        action_cover = [i for block in self.finger_action_blocks for i in _block_indices(block)]
        _check_partition("action", action_cover, self.action_dim)

        state_block_len = self.finger_state_blocks[0][1] - self.finger_state_blocks[0][0]
        action_block_len = self.finger_action_blocks[0][1] - self.finger_action_blocks[0][0]
        _check_offsets("finger_state_xy_offsets", self.finger_state_xy_offsets, state_block_len)
        _check_offsets("finger_action_xy_offsets", self.finger_action_xy_offsets, action_block_len)
        return self

    def validate_for(self, state_dim: int, action_dim: int) -> None:
        """Raise SchemaError unless the schema fits vectors of these widths"""
        if state_dim != self.state_dim or action_dim != self.action_dim:
            raise SchemaError(
                f"schema is for (state_dim={self.state_dim}, action_dim={self.action_dim}), "
                f"data has (state_dim={state_dim}, action_dim={action_dim})"
            )

    def state_source_indices(self, k: int) -> np.ndarray:
        """Gather indices so that slot alpha takes slot (alpha + k) mod N"""
        return _source_indices(self.finger_state_blocks, self.state_dim, k)

    def action_source_indices(self, k: int) -> np.ndarray:
        return _source_indices(self.finger_action_blocks, self.action_dim, k)

    def state_xy_pairs(self) -> np.ndarray:
        """All (x, y) index pairs of the state vector that rotate, shape (P, 2)"""
        pairs = [
            (start + ox, start + oy)
            for start, _ in self.finger_state_blocks
            for ox, oy in self.finger_state_xy_offsets
        ]
        pairs += [tuple(p) for p in self.planar_xy_pairs]
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)

    def action_xy_pairs(self) -> np.ndarray:
        pairs = [
            (start + ox, start + oy)
            for start, _ in self.finger_action_blocks
            for ox, oy in self.finger_action_xy_offsets
        ]
        return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def _check_partition(what: str, cover: List[int], dim: int) -> None:
    if sorted(cover) != list(range(dim)):
        duplicates = sorted({i for i in cover if cover.count(i) > 1})
        missing = sorted(set(range(dim)) - set(cover))
        outside = sorted(i for i in set(cover) if i < 0 or i >= dim)
        raise ValueError(
            f"{what} layout must partition range({dim}): "
            f"duplicates={duplicates} missing={missing} out_of_range={outside}"
        )


def _check_offsets(name: str, offsets: List[IndexPair], block_len: int) -> None:
    flat = [i for pair in offsets for i in pair]
    if len(set(flat)) != len(flat):
        raise ValueError(f"{name} overlap")
    if any(i < 0 or i >= block_len for i in flat):
        raise ValueError(f"{name} must lie inside a block of length {block_len}")


def _source_indices(blocks: List[IndexPair], dim: int, k: int) -> np.ndarray:
    n = len(blocks)
    source = np.arange(dim)
    for alpha in range(n):
        dest = _block_indices(blocks[alpha])
        src = _block_indices(blocks[(alpha + k) % n])
        source[dest] = src
    return source


def parse_schema(payload: dict) -> SymmetrySchema:
    try:
        return SymmetrySchema.model_validate(payload)
    except ValidationError as e:
        raise SchemaError(f"invalid symmetry schema: {e.errors()[0]['msg']}") from e


def load_schema(path: Union[str, Path]) -> SymmetrySchema:
    """Read a schema JSON file"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"schema file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e.msg}") from e
    # gen sidecars embed the schema under "schema"
    if isinstance(payload, dict) and "schema" in payload and "order" not in payload:
        payload = payload["schema"]
    return parse_schema(payload)

