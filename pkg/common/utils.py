from datetime import datetime
from typing import Any, Optional, Set, Tuple

from common.config import TZ_UTC

_WARNINGS_SEEN: Set[Tuple[str, str]] = set()


def utc_now() -> datetime:
    return datetime.now(TZ_UTC)


def dt_to_iso_z(dt_utc: datetime) -> str:
    return dt_utc.astimezone(TZ_UTC).replace(microsecond=0).isoformat().replace("+00:00", "Z")


def log_event(scope: str, message: str, enabled: bool = True) -> None:
    if not enabled:
        return
    print(f"[{dt_to_iso_z(utc_now())}] [{scope}] {message}")


def warn_once(source: str, kind: str, message: str) -> None:
    key = (source, kind)
    if key in _WARNINGS_SEEN:
        return
    _WARNINGS_SEEN.add(key)
    print(f"WARN ({source}): {message}")


def parse_float(value: Optional[str]) -> Optional[float]:
    if value is None:
        return None
    raw = str(value).strip()
    if not raw:
        return None
    try:
        return float(raw)
    except Exception:
        return None


def parse_int(value: Optional[str]) -> Optional[int]:
    if value is None:
        return None
    raw = str(value).strip()
    if not raw:
        return None
    try:
        return int(raw)
    except Exception:
        return None


def parse_bool(value: Optional[str], default: bool) -> bool:
    if value is None:
        return default
    raw = str(value).strip().lower()
    if not raw:
        return default
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    return default


def format_optional_decimal(value: Optional[float], decimals: int = 3) -> str:
    if value is None:
        return "N/D"
    return f"{value:,.{decimals}f}"


def format_float(value: Any) -> str:
    # 17 cifras significativas: lectura exacta del float64 escrito.
    return format(float(value), ".17g")
