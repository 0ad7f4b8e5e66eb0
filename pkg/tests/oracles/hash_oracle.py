"""Standalone reference for identifier hashes.

Deliberately shares no code with the package: digits are produced by
repeated long division over the hex string, not via int arithmetic helpers.
"""
import hashlib
import sys

ALPHABET = "23456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"


def _divmod_hex(hexdigits, base):
    # schoolbook long division of a hex digit string by a small base
    quotient = []
    rem = 0
    for ch in hexdigits:
        rem = rem * 16 + int(ch, 16)
        quotient.append(rem // base)
        rem = rem % base
    q = "".join("%x" % d for d in quotient).lstrip("0")
    return q, rem


def oracle_hash(canonical):
    digest = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:32]
    digits = []
    rest = digest.lstrip("0")
    while rest:
        rest, r = _divmod_hex(rest, len(ALPHABET))
        digits.append(ALPHABET[r])
    out = "".join(reversed(digits))
    return ALPHABET[0] * (22 - len(out)) + out


if __name__ == "__main__":
    for arg in sys.argv[1:]:
        print(arg, oracle_hash(arg))
