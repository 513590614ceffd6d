"""Small helpers shared across the pipeline."""
import hashlib


def derive_seed(master: int, *parts: object) -> int:
    """Deterministic 63-bit seed from a master seed and an identity tuple."""
    text = ":".join([str(master), *(str(p) for p in parts)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1
