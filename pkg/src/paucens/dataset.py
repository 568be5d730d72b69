"""Two-class datasets, CSV ingestion and the ring-shaped synthetic toy data.

Random streams
--------------
The toy generator derives every draw from ``numpy.random.SeedSequence(seed)``.
The root sequence is spawned into six children, in this fixed order::

    train-pos, train-neg, val-pos, val-neg, test-pos, test-neg

and each child seeds its own ``PCG64`` generator. Positive and negative
samples of a split therefore never share a stream, and changing the size of
one split leaves the others untouched. Normal variates come from numpy's
ziggurat sampler (``Generator.normal``), uniforms from ``Generator.uniform``;
both are stable across platforms for a given numpy release.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "Dataset",
    "ToyConfig",
    "generate_toy",
    "load_csv",
    "save_csv",
]

_SPLITS = ("train", "val", "test")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Positive and negative feature vectors.

    Parameters
    ----------
    positives : array, shape (m, d)
    negatives : array, shape (n, d)
    feature_names : tuple of str, optional
        Column names used when the dataset is written to CSV.
    """

    positives: np.ndarray
    negatives: np.ndarray
    feature_names: tuple = field(default=())

    def __post_init__(self):
        pos = np.array(self.positives, dtype=np.float64, ndmin=2, copy=True)
        neg = np.array(self.negatives, dtype=np.float64, ndmin=2, copy=True)
        if pos.ndim != 2 or neg.ndim != 2:
            raise DataError("positives and negatives must be 2-D arrays")
        if pos.shape[0] < 1 or neg.shape[0] < 1:
            raise DataError(
                f"need at least one sample per class (got m={pos.shape[0]}, n={neg.shape[0]})"
            )
        if pos.shape[1] != neg.shape[1] or pos.shape[1] < 1:
            raise DataError(
                f"dimension mismatch: positives have d={pos.shape[1]}, negatives d={neg.shape[1]}"
            )
        if not (np.isfinite(pos).all() and np.isfinite(neg).all()):
            raise DataError("feature values must be finite")
        pos.setflags(write=False)
        neg.setflags(write=False)
        names = tuple(self.feature_names) or tuple(f"f{i}" for i in range(pos.shape[1]))
        if len(names) != pos.shape[1]:
            raise DataError(f"{len(names)} feature names for d={pos.shape[1]}")
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)
        object.__setattr__(self, "feature_names", names)

    @property
    def m(self) -> int:
        return self.positives.shape[0]

    @property
    def n(self) -> int:
        return self.negatives.shape[0]

    @property
    def d(self) -> int:
        return self.positives.shape[1]

    def stacked(self):
        """Return ``(X, y)`` with positives first and labels in {+1, -1}."""
        X = np.vstack([self.positives, self.negatives])
        y = np.concatenate([np.ones(self.m), -np.ones(self.n)])
        return X, y

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.positives, other.positives)
            and np.array_equal(self.negatives, other.negatives)
        )

    __hash__ = None


@dataclass(frozen=True)
class ToyConfig:
    """Parameters of the ring-shaped two-class toy problem.

    Positives lie in a disc of radius ``pos_radius_max``; negatives form a
    noisy ring of mean radius ``neg_radius_mean``.
    """

    n_train_per_class: int = 200
    n_test_per_class: int = 2000
    seed: int = 0
    pos_radius_max: float = 1.5
    neg_radius_mean: float = 2.0
    neg_radius_std: float = 0.4
    n_val_per_class: int = 200

    def __post_init__(self):
        for name in ("n_train_per_class", "n_test_per_class"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.n_val_per_class < 0:
            raise ConfigError("n_val_per_class must be >= 0")
        if not self.neg_radius_std > 0:
            raise ConfigError("neg_radius_std must be > 0")
        if not self.pos_radius_max > 0:
            raise ConfigError("pos_radius_max must be > 0")


def _polar(rng, radius):
    theta = rng.uniform(0.0, 2.0 * math.pi, size=radius.shape[0])
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])


def toy_streams(seed: int):
    """Independent generators for every (split, class) pair, keyed by name."""
    children = np.random.SeedSequence(seed).spawn(2 * len(_SPLITS))
    streams = {}
    for k, split in enumerate(_SPLITS):
        streams[split, "pos"] = np.random.Generator(np.random.PCG64(children[2 * k]))
        streams[split, "neg"] = np.random.Generator(np.random.PCG64(children[2 * k + 1]))
    return streams


def generate_toy(cfg: ToyConfig, split: str = "train") -> Dataset:
    """Draw one split of the toy problem.

    Positive radii are uniform on ``[0, pos_radius_max]``, negative radii
    normal with the configured mean and deviation; all angles are uniform on
    ``[0, 2*pi]``. The result is a pure function of ``(cfg, split)``.
    """
    if split not in _SPLITS:
        raise ConfigError(f"unknown split {split!r}; expected one of {_SPLITS}")
    count = {
        "train": cfg.n_train_per_class,
        "val": cfg.n_val_per_class,
        "test": cfg.n_test_per_class,
    }[split]
    if count < 1:
        raise ConfigError(f"split {split!r} is empty for this configuration")
    streams = toy_streams(cfg.seed)
    rp, rn = streams[split, "pos"], streams[split, "neg"]
    r_pos = rp.uniform(0.0, cfg.pos_radius_max, size=count)
    r_neg = rn.normal(cfg.neg_radius_mean, cfg.neg_radius_std, size=count)
    return Dataset(_polar(rp, r_pos), _polar(rn, r_neg), feature_names=("x", "y"))


def _parse_label(raw: str, row: int):
    text = raw.strip()
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"row {row}: label {raw!r} is not numeric") from None
    if value == 1.0:
        return True
    if value in (0.0, -1.0):
        return False
    raise DataError(f"row {row}: label {raw!r} is not one of 1, 0, -1")


def load_csv(path, label_column: str = "label") -> Dataset:
    """Read a labelled CSV file.

    The file needs a header row. Labels must be ``1`` for positives and either
    ``0`` or ``-1`` for negatives (one convention per file). All other columns
    are features, kept in file order. Row numbers in error messages count the
    header as row 1.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r}")
        li = header.index(label_column)
        names = tuple(h for k, h in enumerate(header) if k != li)
        if not names:
            raise DataError(f"{path}: no feature columns")
        pos, neg, neg_codes = [], [], set()
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {row_no} has {len(row)} fields, header has {len(header)}"
                )
            is_pos = _parse_label(row[li], row_no)
            if not is_pos:
                neg_codes.add(float(row[li]))
            vec = []
            for k, cell in enumerate(row):
                if k == li:
                    continue
                text = cell.strip()
                if not text:
                    raise DataError(f"{path}: row {row_no}, column {header[k]!r}: missing value")
                try:
                    vec.append(float(text))
                except ValueError:
                    raise DataError(
                        f"{path}: row {row_no}, column {header[k]!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            (pos if is_pos else neg).append(vec)
    if len(neg_codes) > 1:
        raise DataError(f"{path}: mixes 0 and -1 as negative labels")
    if not pos or not neg:
        raise DataError(f"{path}: file contains a single class (m={len(pos)}, n={len(neg)})")
    d = len(names)
    return Dataset(
        np.asarray(pos, dtype=np.float64).reshape(-1, d),
        np.asarray(neg, dtype=np.float64).reshape(-1, d),
        feature_names=names,
    )


def save_csv(dataset: Dataset, path, label_column: str = "label", negative_label: int = 0):
    """Write ``dataset`` so that :func:`load_csv` reproduces it exactly."""
    if negative_label not in (0, -1):
        raise ConfigError("negative_label must be 0 or -1")
    if label_column in dataset.feature_names:
        raise ConfigError(f"label column {label_column!r} clashes with a feature name")
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(dataset.feature_names) + [label_column])
        for label, block in ((1, dataset.positives), (negative_label, dataset.negatives)):
            for vec in block:
                writer.writerow([repr(float(v)) for v in vec] + [label])
