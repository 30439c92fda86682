from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace


class ConfigError(ValueError):
    """A configuration violates one of its invariants (message names it)."""


class ConfigUnsupported(ConfigError):
    pass


def required_banks(window_side: int) -> int:
    """Banks needed to read ``window_side`` adjacent rows in one cycle: 2^ceil(log2 s)."""
    if window_side < 1:
        raise ValueError("window side must be >= 1")
    return 1 << math.ceil(math.log2(window_side))


def ceil_log2(n: int) -> int:
    return 0 if n <= 1 else (n - 1).bit_length()


def default_quant_unit(t_th: int, bw_t: int) -> int:
    """Smallest power of two ``u`` with ceil(T_th / u) <= 2^(BW_T - 2).

    Keeps the temporal window within a quarter of the representable span.
    """
    if bw_t >= 34:
        return 1
    cap = 1 << max(bw_t - 2, 0)
    u = 1
    while -(-t_th // u) > cap:
        u <<= 1
    return u


@dataclass(frozen=True)
class FilterParams:
    D_th: int = 1
    T_th: int = 200
    N_CR: int = 1

    def __post_init__(self):
        for name in ("D_th", "T_th", "N_CR"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} >= 1 violated (got {getattr(self, name)})")

    @property
    def window_side(self) -> int:
        return 2 * self.D_th + 1


@dataclass(frozen=True)
class ClfConfig:
    """All CLF design parameters.

    ``N_RM``/``N_CM`` and ``quant_unit`` default to ``None`` meaning "derive":
    banks from the window side, quantization from :func:`default_quant_unit`.
    """

    params: FilterParams = field(default_factory=FilterParams)
    N_RM: int | None = None
    N_CM: int | None = None
    s_RM: int = 4
    s_CM: int = 4
    BW_T: int = 64
    quant_unit: int | None = None
    enable_rdm: bool = True
    enable_cdm: bool = True
    pipelined: bool = False
    same_polarity_only: bool = False

    def __post_init__(self):
        need = required_banks(self.params.window_side)
        if self.N_RM is None:
            object.__setattr__(self, "N_RM", need)
        if self.N_CM is None:
            object.__setattr__(self, "N_CM", need)
        if self.quant_unit is None:
            object.__setattr__(self, "quant_unit", default_quant_unit(self.params.T_th, self.BW_T))
        self.validate()

    def validate(self) -> None:
        p = self.params
        need = required_banks(p.window_side)
        if not (self.enable_rdm or self.enable_cdm):
            raise ConfigError("at least one of RDM/CDM must be enabled")
        for flag, n, s, tag in ((self.enable_rdm, self.N_RM, self.s_RM, "RM"),
                                (self.enable_cdm, self.N_CM, self.s_CM, "CM")):
            if n < 1 or n & (n - 1):
                raise ConfigError(f"N_{tag} must be a power of two (got {n})")
            # N=1 is the single-bank degenerate case (RCF); otherwise the
            # window's rows must map to distinct banks
            if flag and n != 1 and n < need:
                raise ConfigError(
                    f"N_{tag} >= 2^ceil(log2(2*D_th+1)) = {need} violated (got {n})")
            if flag and s < 1:
                raise ConfigError(f"s_{tag} >= 1 violated when module enabled (got {s})")
        if not 1 <= self.BW_T <= 64:
            raise ConfigError(f"BW_T must be in [1, 64] (got {self.BW_T})")
        if self.quant_unit < 1:
            raise ConfigError(f"quant_unit >= 1 violated (got {self.quant_unit})")
        if self.BW_T < 64 and self.T_th_ticks >= (1 << self.BW_T):
            raise ConfigError(
                f"ceil(T_th/quant_unit) < 2^BW_T violated ({self.T_th_ticks} >= {1 << self.BW_T})")
        if self.pipelined and p.N_CR != 1:
            raise ConfigUnsupported(f"pipelined implies N_CR = 1 (got N_CR={p.N_CR})")

    @property
    def T_th_ticks(self) -> int:
        return -(-self.params.T_th // self.quant_unit)

    @property
    def T_s(self) -> int:
        """Representable stored-timestamp span in microseconds."""
        return self.quant_unit << self.BW_T

    @property
    def D_th(self) -> int:
        return self.params.D_th

    @property
    def N_CR(self) -> int:
        return self.params.N_CR

    def with_(self, **changes) -> "ClfConfig":
        """Copy with changes; FilterParams fields may be given flat."""
        pchanges = {k: changes.pop(k) for k in ("D_th", "T_th", "N_CR") if k in changes}
        params = replace(self.params, **pchanges)
        # derived fields are re-derived unless given explicitly
        if "D_th" in pchanges:
            changes.setdefault("N_RM", None)
            changes.setdefault("N_CM", None)
        if "T_th" in pchanges or "BW_T" in changes:
            changes.setdefault("quant_unit", None)
        return replace(self, params=params, **changes)

    @classmethod
    def rcf(cls, params: FilterParams, BW_T: int = 64, quant_unit: int | None = None) -> "ClfConfig":
        """The degenerate single-bank, single-slot configuration."""
        return cls(params=params, N_RM=1, N_CM=1, s_RM=1, s_CM=1, BW_T=BW_T, quant_unit=quant_unit)

    @classmethod
    def from_dict(cls, d: dict) -> "ClfConfig":
        """Build from a JSON-style mapping.

        Accepts FilterParams fields either flat or under ``"params"``. Following
        the ``N-sRM-sCM-BW`` table notation, ``s_RM=0`` / ``s_CM=0`` disables the
        module unless an explicit enable flag says otherwise.
        """
        d = dict(d)
        pd = dict(d.pop("params", {}) or {})
        for k in ("D_th", "T_th", "N_CR"):
            if k in d:
                pd[k] = d.pop(k)
        known = {f.name for f in fields(cls)} - {"params"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if d.get("s_RM") == 0:
            d.setdefault("enable_rdm", False)
        if d.get("s_CM") == 0:
            d.setdefault("enable_cdm", False)
        try:
            params = FilterParams(**{k: int(v) for k, v in pd.items()})
        except TypeError as e:
            raise ConfigError(str(e)) from None
        return cls(params=params, **d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(d.pop("params"))
        return d

    def label(self) -> str:
        """Short ``N-sRM-sCM-BW`` tag (disabled module shows s=0)."""
        s_rm = self.s_RM if self.enable_rdm else 0
        s_cm = self.s_CM if self.enable_cdm else 0
        return f"{self.N_RM}-{s_rm}-{s_cm}-{self.BW_T}"
