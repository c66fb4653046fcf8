"""INI experiment configuration with a fixed schema; unknown sections or keys are errors.

Units: dB/km, ps^2/km, 1/(W km), km, THz for the link; m and GHz for the
SSFM; GBd and GHz for the WDM grid; dBm for every launch power (per WDM
channel, summed over polarizations).
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

from .analytic import AnalyticChannelParams
from .core import ConfigurationError, dbm_to_mw
from .selection import CostChannel
from .ssfm import LinkSpec, SsfmSpec
from .txrx import EDGE_NONLINEAR, WdmConfig

__all__ = ["SCHEMA", "ExperimentConfig", "load_config", "parse_config"]

SCENARIO_KINDS = ("analytic", "single_channel_1pol", "wdm_2pol", "wdm_2pol_subcarrier")


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _words(text: str) -> tuple[str, ...]:
    return tuple(t for t in text.replace(",", " ").split())


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple]] = {
    "experiment": {
        "scenario": (str, "single_channel_1pol"),
        "seed": (int, 0),
        "out": (str, "."),
    },
    "link": {
        "alpha": (float, 0.2),
        "beta2": (float, -21.7),
        "gamma": (float, 1.27),
        "length": (float, 1000.0),
        "nsp": (float, 1.0),
        "carrier_freq": (float, 193.41),
    },
    "ssfm": {
        "step_size": (float, 500.0),
        "sampling_rate": (float, 100.0),
        "scheme": (str, "symmetrized"),
        "noise": (_bool, True),
    },
    "dbp": {
        "step_size": (float, 500.0),
        "sampling_rate": (float, 100.0),
    },
    "wdm": {
        "num_channels": (int, 1),
        "symbol_rate": (float, 50.0),
        "channel_spacing": (float, 50.0),
        "subcarriers_per_channel": (int, 1),
        "subcarrier_rate": (float, 12.5),
        "subcarrier_spacing": (float, 12.5),
    },
    "source": {
        "n_symbols": (int, 2**16),
        "edge": (int, EDGE_NONLINEAR),
    },
    "sweep": {
        "powers_dbm": (_floats, (-10.0, -9.0, -8.0)),
        "variants": (_words, ("benchmark",)),
    },
    "selection": {
        "procedure": (str, "fast"),
        "n": (int, 64),
        "n_guard": (int, 0),
        "n_it": (int, 1),
        "eta_target": (_opt_float, 0.01),
        "gamma_lambda": (_opt_float, None),
        "target_accepted": (int, 1000),
        "burst_length": (int, 2**17),
        "power_dbm": (float, -9.0),
        "max_bursts": (int, 1000),
        "step_size": (float, 500.0),
        "sampling_rate": (float, 100.0),
    },
    "analytic": {
        "a": (float, 0.01),
        "sigma_w2": (float, 0.001),
        "n": (int, 60),
        "n_primes": (_floats, (10.0, 20.0, 30.0)),
        "p_min_db": (float, -30.0),
        "p_max_db": (float, 50.0),
        "points": (int, 161),
    },
    "nli": {
        "burst_length": (int, 2**15),
        "n": (int, 64),
        "bursts": (int, 1),
        "power_dbm": (float, -9.0),
        "power_step_db": (float, 3.0),
        "tail_lo": (float, 0.0),
        "tail_hi": (float, 0.02),
        "bins": (int, 100),
    },
    "metric": {
        "sigma2_floor": (float, 1e-30),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed configuration: every schema key resolved to a typed value."""

    values: dict
    text: str = ""

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @property
    def scenario(self) -> str:
        return self.values["experiment"]["scenario"]

    @property
    def seed(self) -> int:
        return self.values["experiment"]["seed"]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        vals = {s: dict(kv) for s, kv in self.values.items()}
        vals["experiment"]["seed"] = seed
        return ExperimentConfig(vals, self.text)

    def canonical(self) -> str:
        """Key-sorted rendering of every resolved value (independent of layout and comments)."""
        lines = []
        for section in sorted(self.values):
            for key in sorted(self.values[section]):
                if (section, key) in (("experiment", "out"), ("experiment", "seed")):
                    continue
                lines.append(f"{section}.{key}={self.values[section][key]!r}")
        return "\n".join(lines)

    @property
    def config_hash(self) -> str:
        """SHA-256 of :meth:`canonical`; the seed and output directory are reported separately."""
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    # -- builders ------------------------------------------------------------
    def link(self) -> LinkSpec:
        v = self.values["link"]
        return LinkSpec(alpha=v["alpha"], beta2=v["beta2"], gamma_nl=v["gamma"], length=v["length"],
                        nsp=v["nsp"], carrier_freq=v["carrier_freq"])

    def ssfm(self) -> SsfmSpec:
        v = self.values["ssfm"]
        return SsfmSpec(step_size=v["step_size"], sampling_rate=v["sampling_rate"], scheme=v["scheme"],
                        noise=v["noise"], seed=self.seed)

    def dbp_ssfm(self) -> SsfmSpec:
        v = self.values["dbp"]
        return SsfmSpec(step_size=v["step_size"], sampling_rate=v["sampling_rate"], scheme=self["ssfm"]["scheme"])

    def wdm(self) -> WdmConfig:
        v = self.values["wdm"]
        return WdmConfig(**v)

    @property
    def pol_count(self) -> int:
        return 1 if self.scenario == "single_channel_1pol" else 2

    def cost_channel(self) -> CostChannel:
        v = self.values["selection"]
        w = self.wdm()
        return CostChannel(link=self.link(),
                           ssfm=SsfmSpec(step_size=v["step_size"], sampling_rate=v["sampling_rate"],
                                         scheme=self["ssfm"]["scheme"]),
                           symbol_rate=w.symbol_rate, pol_count=self.pol_count,
                           subcarriers=w.subcarriers_per_channel)

    def selection_power(self) -> float:
        """Symbol power (mW) of one lane and polarization at the selection launch power."""
        w = self.wdm()
        return float(dbm_to_mw(self["selection"]["power_dbm"])) / self.pol_count / w.subcarriers_per_channel

    def analytic_grid(self) -> list[float]:
        v = self.values["analytic"]
        if v["points"] < 1:
            raise ConfigurationError("analytic.points must be >= 1")
        if v["points"] == 1:
            return [10 ** (v["p_min_db"] / 10)]
        step = (v["p_max_db"] - v["p_min_db"]) / (v["points"] - 1)
        return [10 ** ((v["p_min_db"] + i * step) / 10) for i in range(v["points"])]

    def analytic_params(self, n_prime: float) -> AnalyticChannelParams:
        v = self.values["analytic"]
        return AnalyticChannelParams(v["a"], v["sigma_w2"], v["n"], n_prime)


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigurationError(f"unknown config key {section}.{key}")
            conv = SCHEMA[section][key][0]
            try:
                values[section][key] = conv(raw)
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {section}.{key}: {raw!r}") from exc
    cfg = ExperimentConfig(values, text)
    _validate(cfg)
    return cfg


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return parse_config("")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.scenario not in SCENARIO_KINDS:
        raise ConfigurationError(f"unknown scenario {cfg.scenario!r}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigurationError("seed must be an unsigned 64-bit integer")
    if not cfg["sweep"]["powers_dbm"]:
        raise ConfigurationError("empty power sweep")
    if not all(math.isfinite(p) for p in cfg["sweep"]["powers_dbm"]):
        raise ConfigurationError("sweep powers must be finite")
    sel = cfg["selection"]
    if sel["procedure"] not in ("fast", "averaged"):
        raise ConfigurationError("selection.procedure must be 'fast' or 'averaged'")
    if (sel["eta_target"] is None) == (sel["gamma_lambda"] is None):
        raise ConfigurationError("set exactly one of selection.eta_target and selection.gamma_lambda")
    # build every section once so that module-level validation runs up front
    cfg.link()
    cfg.ssfm()
    cfg.dbp_ssfm()
    cfg.wdm()
    if cfg.scenario != "analytic":
        cfg.cost_channel()
