"""Detection configuration shared by the scan and the detector."""

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

from ._validation import check_int, check_nonneg
from .exceptions import ConfigurationError
from .neural import MlpSpec, TrainConfig

REGIMES = ("independent", "subgaussian", "dependent")


def parse_threshold(value):
    """Normalise a threshold setting.

    Accepts a non-negative number, ``"auto"``, ``"signal:<M1>"`` or
    ``"half:<M1>"`` (strings as they come from the command line), or the
    equivalent tuples ``("signal", M1)`` / ``("half", M1)``.  A bare
    ``"signal"`` or ``"half"`` (``M1 = None``) takes ``M1*`` from the
    dataset's recorded signals at detection time.
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if not math.isfinite(value) and value != math.inf:
            raise ConfigurationError(f"threshold must be a number, got {value!r}")
        if value < 0:
            raise ConfigurationError(f"threshold must be >= 0, got {value}")
        return float(value)
    if isinstance(value, (tuple, list)) and len(value) == 2 and value[0] in ("signal", "half"):
        if value[1] is None:
            return (value[0], None)
        return (value[0], check_nonneg(float(value[1]), "M1*"))
    if isinstance(value, str):
        text = value.strip().lower()
        if text == "auto":
            return "auto"
        if text in ("signal", "half"):
            return (text, None)
        for mode in ("signal", "half"):
            if text.startswith(mode + ":"):
                try:
                    m1 = float(text.split(":", 1)[1])
                except ValueError:
                    raise ConfigurationError(f"bad threshold {value!r}") from None
                return (mode, check_nonneg(m1, "M1*"))
        try:
            return parse_threshold(float(text))
        except ValueError:
            pass
    raise ConfigurationError(
        f"threshold must be a number >= 0, 'auto', 'signal:<M1>' or 'half:<M1>', got {value!r}"
    )


@dataclass(frozen=True)
class DetectionConfig:
    """Window sizes, threshold, and training settings for one detection run.

    ``T1``, ``T2``, ``T3`` left as ``None`` are filled from
    :func:`cpscan.detector.suggest_windows` (or from ``t0`` when given, as
    ``(t0, t0, 2 t0)``).  ``pi`` is parsed by :func:`parse_threshold`.
    ``refine_radius`` switches on coarse-then-refine scanning when
    ``stride > 1``.
    """

    T1: int = None
    T2: int = None
    T3: int = None
    t0: int = None
    pi: object = "auto"
    stride: int = 1
    refine_radius: int = None
    regime: str = "independent"
    kappa: float = 8.0
    hidden: tuple = (256, 256)
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    batch_size: int = 32
    standardize: bool = True
    warm_start: bool = False

    def __post_init__(self):
        for name in ("T1", "T2", "T3", "t0"):
            if getattr(self, name) is not None:
                check_int(getattr(self, name), name, minimum=1)
        check_int(self.stride, "stride", minimum=1)
        check_int(self.batch_size, "batch_size", minimum=1)
        if self.refine_radius is not None:
            check_int(self.refine_radius, "refine_radius", minimum=0)
        if self.regime not in REGIMES:
            raise ConfigurationError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        object.__setattr__(self, "pi", parse_threshold(self.pi))
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))
        if any(w < 1 for w in self.hidden):
            raise ConfigurationError(f"hidden widths must be >= 1, got {self.hidden}")

    def mlp_spec(self, p, h):
        return MlpSpec.from_dims(p, h, self.hidden)

    def resolved(self, n_rows):
        """Copy with every window size filled in for a series of ``n_rows``."""
        if None not in (self.T1, self.T2, self.T3):
            return self
        from .detector import suggest_windows

        if self.t0 is not None:
            base = (self.t0, self.t0, 2 * self.t0)
        else:
            base = suggest_windows(n_rows, self.regime, kappa=self.kappa)
        return replace(
            self,
            T1=self.T1 if self.T1 is not None else base[0],
            T2=self.T2 if self.T2 is not None else base[1],
            T3=self.T3 if self.T3 is not None else base[2],
        )

    def with_train(self, **kwargs):
        return replace(self, train=replace(self.train, **kwargs))

    def to_dict(self):
        pi = self.pi
        if isinstance(pi, tuple):
            pi = pi[0] if pi[1] is None else f"{pi[0]}:{pi[1]!r}"
        return {
            "T1": self.T1, "T2": self.T2, "T3": self.T3, "t0": self.t0,
            "pi": pi, "stride": self.stride, "refine_radius": self.refine_radius,
            "regime": self.regime, "kappa": self.kappa, "hidden": list(self.hidden),
            "train": self.train.digest(), "seed": self.seed,
            "batch_size": self.batch_size, "standardize": self.standardize,
            "warm_start": self.warm_start,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        train = d.pop("train", None) or {}
        if "hidden" in d:
            d["hidden"] = tuple(d["hidden"])
        return cls(train=TrainConfig(**train), **d)

    def digest(self):
        """Short content hash of everything that affects the error curve."""
        keys = ("T1", "T2", "stride", "hidden", "train", "seed", "batch_size",
                "standardize", "warm_start")
        d = self.to_dict()
        blob = json.dumps({k: d[k] for k in keys}, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]
