"""Plain-text ``key=value`` run configuration."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _list(conv: Callable[[str], Any]) -> Callable[[str], Tuple]:
    def parse(text: str) -> Tuple:
        return tuple(conv(t.strip()) for t in text.split(",") if t.strip())

    return parse


def _opt_float(text: str) -> Optional[float]:
    return None if text.strip().lower() in ("", "none") else float(text)


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[str], Any]
    default: Any
    help: str
    tunable: Optional[int] = None  # position in the seven-dimensional search space


KEYS: Tuple[Key, ...] = (
    # data
    Key("stations", _list(str), ("46025", "46042", "46069"), "station ids to load"),
    Key("years", _list(int), (2009, 2010), "archive years to load"),
    Key("data_dir", str, "data", "directory of stdmet archives (<station>h<year>.txt[.gz])"),
    Key("table", str, "", "aligned table CSV; replaces stations/years/data_dir when set"),
    Key("features", _list(str), ("WVHT",), "input columns: FEAT (every station) or station:FEAT"),
    Key("target", _list(str), ("46069:WVHT",), "target columns as station:FEAT"),
    Key("power", _list(str), (), "stations whose energy flux is appended as station:POWER"),
    Key("split", _list(float), (0.6, 0.2, 0.2), "train,validation,test fractions"),
    Key("stride", int, 1, "window stride"),
    Key("scale", _bool, True, "standardise columns with training statistics"),
    # model
    Key("model", str, "seq2seq", "seq2seq | sl-rnn | ml-rnn | sl-lstm | ml-lstm"),
    Key("hidden", int, 64, "hidden units per recurrent layer", 1),
    Key("T", int, 10, "input time steps", 2),
    Key("T_out", int, 1, "forecast horizon (decoder steps)"),
    Key("batch_size", int, 16, "mini-batch size", 3),
    Key("lr", float, 0.001, "initial learning rate", 4),
    Key("layers", int, 1, "stacked recurrent layers (seq2seq)", 5),
    Key("l2", float, 0.001, "coefficient of the squared 2-norm penalty", 6),
    Key("k_fraction", float, 0.4, "schedule constant k as a fraction of epochs", 7),
    Key("l1", float, 0.0, "coefficient of the 1-norm penalty"),
    Key("epochs", int, 15, "training epochs"),
    Key("optimizer", str, "adam", "sgd | rmsprop | adam | amsgrad"),
    Key("decay", float, 1.0, "per-epoch learning-rate multiplier"),
    Key("clip_norm", _opt_float, None, "gradient norm clip (none to disable)"),
    Key("init_std", float, 0.1, "standard deviation of initial weights"),
    Key("forget_bias", float, 1.0, "initial forget-gate bias"),
    Key("seed", int, None, "random seed (required for train, tune, reconstruct, select-features)"),
    # reconstruction
    Key("train_year", int, 2009, "reconstruction training year"),
    Key("test_year", int, 2010, "reconstruction test year"),
    Key("lead", int, 0, "reconstruction lead: 0 nowcast, 1 one step ahead"),
    Key("val_frac", float, 0.2, "share of the reconstruction training year held out for validation"),
    # tuning
    Key("budget", int, 100, "tuning evaluations"),
    Key("tune_epochs", int, 0, "epochs per tuning evaluation (0: use epochs)"),
    Key("grid_hidden", _list(int), (32, 64), "tuning values for hidden"),
    Key("grid_T", _list(int), (10, 20, 30, 40, 50, 60), "tuning values for T"),
    Key("grid_batch_size", _list(int), (16, 32, 64, 128, 256), "tuning values for batch_size"),
    Key("grid_lr", _list(float), tuple(round(0.001 * i, 3) for i in range(1, 11)), "tuning values for lr"),
    Key("grid_layers", _list(int), (1, 2, 4), "tuning values for layers"),
    Key("grid_l2", _list(float), tuple(round(0.001 * i, 3) for i in range(1, 11)), "tuning values for l2"),
    Key("grid_k_fraction", _list(float), tuple(round(0.1 * i, 1) for i in range(1, 11)),
        "tuning values for k_fraction"),
    Key("grid_l1", _list(float), (), "tuning values for l1; empty keeps l1 fixed"),
    # forecasting / metrics
    Key("checkpoint", str, "", "checkpoint directory to load"),
    Key("input", str, "", "input table CSV"),
    Key("truth", str, "", "truth CSV (metrics)"),
    Key("prediction", str, "", "prediction CSV (metrics)"),
    Key("out", str, "out", "output directory"),
)

KEY_INDEX: Dict[str, Key] = {k.name: k for k in KEYS}
TUNABLES: Tuple[str, ...] = tuple(k.name for k in sorted((k for k in KEYS if k.tunable), key=lambda k: k.tunable))


class RunConfig:
    """Validated settings; attribute access by key name."""

    def __init__(self, values: Optional[Mapping[str, Any]] = None):
        self._values: Dict[str, Any] = {k.name: k.default for k in KEYS}
        for key, value in (values or {}).items():
            self.set(key, value)

    def set(self, key: str, value: Any) -> None:
        if key not in KEY_INDEX:
            raise ConfigError(key, "unknown configuration key")
        if isinstance(value, str):
            try:
                value = KEY_INDEX[key].parse(value)
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
        self._values[key] = value

    def __getattr__(self, name: str) -> Any:
        try:
            return self.__dict__["_values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def __getitem__(self, name: str) -> Any:
        return self._values[name]

    def as_dict(self) -> Dict[str, Any]:
        return dict(self._values)

    def require(self, *names: str) -> None:
        for n in names:
            v = self._values[n]
            if v is None or v == "" or v == ():
                raise ConfigError(n, "required")

    def validate(self) -> None:
        v = self._values
        for n in ("hidden", "T", "T_out", "batch_size", "layers", "epochs", "budget", "stride"):
            if v[n] < 1:
                raise ConfigError(n, "must be >= 1")
        for n in ("lr", "decay", "init_std", "k_fraction"):
            if not v[n] > 0:
                raise ConfigError(n, "must be positive")
        for n in ("l2", "l1", "tune_epochs", "lead"):
            if v[n] < 0:
                raise ConfigError(n, "must be non-negative")
        if len(v["split"]) != 3 or abs(sum(v["split"]) - 1.0) > 1e-9 or min(v["split"]) < 0:
            raise ConfigError("split", "need three non-negative fractions summing to 1")
        if not 0 < v["val_frac"] < 1:
            raise ConfigError("val_frac", "must lie in (0, 1)")
        from .optim import VARIANTS
        from .seq2seq.model import MODEL_KINDS

        if v["model"] not in MODEL_KINDS:
            raise ConfigError("model", f"choose from {', '.join(MODEL_KINDS)}")
        if v["optimizer"] not in VARIANTS:
            raise ConfigError("optimizer", f"choose from {', '.join(VARIANTS)}")
        for name in TUNABLES:
            vals = v[f"grid_{name}"]
            if not vals or list(vals) != sorted(vals):
                raise ConfigError(f"grid_{name}", "need a non-empty ascending list")
        if list(v["grid_l1"]) != sorted(v["grid_l1"]) or any(x < 0 for x in v["grid_l1"]):
            raise ConfigError("grid_l1", "need an ascending list of non-negative values")

    def to_text(self) -> str:
        lines = []
        for k in KEYS:
            value = self._values[k.name]
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(str(x) for x in value)
            elif isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{k.name}={value}")
        return "\n".join(lines) + "\n"


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or f"{source}:{lineno}", f"line {lineno}: expected key=value")
        if key not in KEY_INDEX:
            raise ConfigError(key, "unknown configuration key")
        out[key] = value.strip()
    return out


def load_config(path=None, overrides: Optional[Mapping[str, Any]] = None) -> RunConfig:
    values: Dict[str, Any] = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text(), str(path)))
    values.update(overrides or {})
    cfg = RunConfig(values)
    cfg.validate()
    return cfg


def keys_help() -> str:
    width = max(len(k.name) for k in KEYS)
    lines = ["configuration keys (key=value):"]
    for k in KEYS:
        default = k.default
        if isinstance(default, tuple):
            default = ",".join(str(x) for x in default)
        tag = f" [tunable {k.tunable}]" if k.tunable else ""
        lines.append(f"  {k.name:<{width}}  {k.help}{tag} (default: {default})")
    return "\n".join(lines)
