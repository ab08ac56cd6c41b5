import os
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]


def _resolve_data_root() -> Path:
    override = os.environ.get("MLEMBED_OUTPUT_DIR", "").strip()
    if override:
        return Path(override)
    # Prefer a "data/" folder next to the checkout if it exists (monorepo layout).
    candidate = PROJECT_ROOT.parent / "data"
    if candidate.exists():
        return candidate
    return PROJECT_ROOT / "data"


DATA_DIR = _resolve_data_root()


def ensure_data_dir() -> Path:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    return DATA_DIR


def default_output_path(dataset_path: str, suffix: str) -> Path:
    stem = Path(dataset_path).stem or "dataset"
    return ensure_data_dir() / f"{stem}-{suffix}"
