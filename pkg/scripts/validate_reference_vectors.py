from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from pe_alloc.core.test_vectors import reference_vectors  # noqa: E402


def main() -> int:
    data = reference_vectors.load_vectors()
    errors = reference_vectors.validate_vectors(data)
    if errors:
        for error in errors:
            print(f"reference_vectors.json: {error}")
        return 1
    print("reference_vectors.json: OK")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
