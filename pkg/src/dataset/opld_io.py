"""
OPLD File Module - Little-endian binary reader/writer for episode datasets

Layout:
    header   magic "OPLD", then u32 version, state_dim, action_dim, n_episodes, episode_len
    episode  u64 episode_id, i8 label, then episode_len records of
             [state f32 x state_dim, action f32 x action_dim, reward f32]
"""
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union
import logging

import numpy as np

from src.dataset.episodes import Episode, EpisodeDataset, EpisodeLabel
from src.exceptions import FormatError

logger = logging.getLogger(__name__)

MAGIC = b"OPLD"
VERSION = 1
HEADER = struct.Struct("<4s5I")
EPISODE_PREFIX = struct.Struct("<Qb")
FLOAT = np.dtype("<f4")

PathLike = Union[str, Path]


@dataclass(frozen=True)
class DatasetHeader:
    magic: bytes
    version: int
    state_dim: int
    action_dim: int
    n_episodes: int
    episode_len: int

    @property
    def record_width(self) -> int:
        return self.state_dim + self.action_dim + 1

    @property
    def episode_bytes(self) -> int:
        return EPISODE_PREFIX.size + self.episode_len * self.record_width * FLOAT.itemsize

    @property
    def file_bytes(self) -> int:
        return HEADER.size + self.n_episodes * self.episode_bytes


def to_bytes(ds: EpisodeDataset) -> bytes:
    """Serialize a dataset to the .opld byte layout"""
    parts = [HEADER.pack(MAGIC, VERSION, ds.state_dim, ds.action_dim, ds.n_episodes, ds.episode_len)]
    for ep in ds.episodes:
        parts.append(EPISODE_PREFIX.pack(ep.episode_id, int(ep.label)))
        records = np.concatenate([ep.states, ep.actions, ep.rewards[:, None]], axis=1)
        parts.append(np.ascontiguousarray(records, dtype=FLOAT).tobytes())
    return b"".join(parts)


def read_header(data: bytes) -> DatasetHeader:
    if len(data) < HEADER.size:
        raise FormatError("header", f"expected {HEADER.size} bytes, got {len(data)}")
    magic, version, state_dim, action_dim, n_episodes, episode_len = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError("magic", f"expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise FormatError("version", f"expected {VERSION}, got {version}")
    for name, value in (("state_dim", state_dim), ("action_dim", action_dim), ("episode_len", episode_len)):
        if value < 1:
            raise FormatError(name, f"must be >= 1, got {value}")
    return DatasetHeader(magic, version, state_dim, action_dim, n_episodes, episode_len)


def from_bytes(data: bytes) -> EpisodeDataset:
    """
    Parse .opld bytes

    Args:
        data: Full file contents

    Returns:
        EpisodeDataset with float32 payloads exactly as stored

    Raises:
        FormatError naming the offending field
    """
    header = read_header(data)
    expected = header.file_bytes
    if len(data) < expected:
        raise FormatError(
            "file_size", f"truncated: expected {expected} bytes, got {len(data)}"
        )
    if len(data) > expected:
        raise FormatError(
            "file_size", f"trailing bytes: expected {expected} bytes, got {len(data)}"
        )

    s, a = header.state_dim, header.action_dim
    valid_labels = {int(label) for label in EpisodeLabel}
    episodes = []
    seen = set()
    offset = HEADER.size
    for index in range(header.n_episodes):
        episode_id, label = EPISODE_PREFIX.unpack_from(data, offset)
        offset += EPISODE_PREFIX.size
        if label not in valid_labels:
            raise FormatError("label", f"episode #{index} has invalid label byte {label}")
        if episode_id in seen:
            raise FormatError("episode_id", f"duplicate id {episode_id}")
        seen.add(episode_id)

        count = header.episode_len * header.record_width
        records = np.frombuffer(data, dtype=FLOAT, count=count, offset=offset)
        records = records.reshape(header.episode_len, header.record_width)
        offset += count * FLOAT.itemsize
        if not np.all(np.isfinite(records)):
            raise FormatError("payload", f"episode {episode_id} contains non-finite values")

        episodes.append(Episode(
            episode_id=int(episode_id),
            label=EpisodeLabel(label),
            states=records[:, :s],
            actions=records[:, s:s + a],
            rewards=records[:, s + a],
        ))

    return EpisodeDataset(s, a, header.episode_len, tuple(episodes))


def save(ds: EpisodeDataset, path: PathLike) -> Path:
    """Write ds to path (parent directories are created)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = to_bytes(ds)
    path.write_bytes(data)
    logger.info(f"Saved {ds.n_episodes} episodes to {path} ({len(data)} bytes)")
    return path


def load(path: PathLike) -> EpisodeDataset:
    """Read an .opld file"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    ds = from_bytes(path.read_bytes())
    logger.info(f"Loaded {ds.n_episodes} episodes from {path}")
    return ds
