"""Text persistence for ``TrainedLcd``.

Layout::

    LCDMODEL v1
    d=2
    n=8
    sigma=0x1.c4b4c5e9d1e39p-4
    bias=-0x1.1e6b1b8a4c4f2p+0
    mode=certified
    prov.<key>=<value>
    guar.<key>=<value>
    weights 64
    <one hex float per line, row-major cell order>
    checksum=<FNV-1a 64 of every preceding byte, 16 hex digits>

Floats are written with ``float.hex`` so a round trip is bit exact.
"""

import math
from pathlib import Path

import numpy as np

from .featuremap import FeatureMapParams
from .lcd import GuaranteeReport, TrainedLcd
from .svm import LinearModel, SolverDiagnostics

MAGIC = "LCDMODEL"
VERSION = "v1"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


class ModelFileError(ValueError):
    """Base class for unreadable model files."""


class ModelVersionError(ModelFileError):
    pass


class ModelParseError(ModelFileError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ModelTruncatedError(ModelFileError):
    pass


class ModelChecksumError(ModelFileError):
    pass


def fnv1a_64(data):
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK
    return h


def _encode(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return float(value).hex()
    text = str(value)
    if "\n" in text:
        raise ValueError("provenance values must be single-line")
    return text


def _decode(text):
    """Inverse of ``_encode``; strings that are not numbers or booleans stay strings."""
    if text in ("true", "false"):
        return text == "true"
    if text in ("inf", "-inf", "nan") or "0x" in text:
        try:
            return float.fromhex(text)
        except ValueError:
            return text
    if text.lstrip("-").isdigit():
        return int(text)
    return text


def dumps(lcd):
    lines = [f"{MAGIC} {VERSION}",
             f"d={lcd.featuremap.d}",
             f"n={lcd.featuremap.n}",
             f"sigma={float(lcd.featuremap.sigma).hex()}",
             f"bias={float(lcd.model.b).hex()}",
             f"mode={lcd.mode}"]
    lines.extend(f"prov.{k}={_encode(v)}" for k, v in lcd.provenance.items())
    g = lcd.guarantee
    lines.extend(f"guar.{k}={_encode(getattr(g, k))}" for k in GuaranteeReport.__dataclass_fields__)
    lines.append(f"weights {lcd.model.w.size}")
    lines.extend(float(v).hex() for v in lcd.model.w)
    body = ("\n".join(lines) + "\n").encode("ascii")
    return body + f"checksum={fnv1a_64(body):016x}\n".encode("ascii")


def save_model(lcd, destination):
    data = dumps(lcd)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        Path(destination).write_bytes(data)


def _hexfloat(text, lineno):
    try:
        return float.fromhex(text)
    except ValueError:
        raise ModelParseError(lineno, f"bad hexadecimal float {text!r}") from None


def loads(data):
    if isinstance(data, str):
        data = data.encode("ascii")
    text = data.decode("ascii", errors="replace")
    lines = text.split("\n")
    header = lines[0].split()
    if len(header) != 2 or header[0] != MAGIC:
        raise ModelParseError(1, f"not an LCD model file (header {lines[0][:40]!r})")
    if header[1] != VERSION:
        raise ModelVersionError(f"unsupported model file version {header[1]!r}, expected {VERSION}")

    top, prov, guar = {}, {}, {}
    pos = 1
    while True:
        if pos >= len(lines) or lines[pos] == "":
            raise ModelTruncatedError("file ends before the weights section")
        line = lines[pos]
        if line.startswith("weights "):
            break
        key, sep, value = line.partition("=")
        if not sep:
            raise ModelParseError(pos + 1, f"expected key=value, got {line[:40]!r}")
        if key.startswith("prov."):
            prov[key[5:]] = _decode(value)
        elif key.startswith("guar."):
            guar[key[5:]] = _decode(value)
        elif key in ("d", "n", "sigma", "bias", "mode"):
            top[key] = (pos + 1, value)
        else:
            raise ModelParseError(pos + 1, f"unknown key {key!r}")
        pos += 1

    try:
        count = int(lines[pos].split()[1])
    except (IndexError, ValueError):
        raise ModelParseError(pos + 1, f"bad weights header {lines[pos]!r}") from None
    weights_start = pos + 1
    if len(lines) < weights_start + count + 1:
        raise ModelTruncatedError(f"expected {count} weights, file ends early")
    weights = np.array([_hexfloat(lines[weights_start + k].strip(), weights_start + k + 1)
                        for k in range(count)])
    tail = lines[weights_start + count]
    if not tail.startswith("checksum="):
        if tail == "":
            raise ModelTruncatedError("checksum line missing")
        raise ModelParseError(weights_start + count + 1, "expected checksum line after weights")
    body = ("\n".join(lines[:weights_start + count]) + "\n").encode("ascii")
    try:
        stored = int(tail[len("checksum="):], 16)
    except ValueError:
        raise ModelParseError(weights_start + count + 1, "checksum is not hexadecimal") from None
    if stored != fnv1a_64(body):
        raise ModelChecksumError("checksum mismatch; file is corrupted")

    missing = {"d", "n", "sigma", "bias", "mode"} - set(top)
    if missing:
        raise ModelTruncatedError(f"missing header fields {sorted(missing)}")
    try:
        d, n = int(top["d"][1]), int(top["n"][1])
    except ValueError:
        raise ModelParseError(top["d"][0], "d and n must be integers") from None
    sigma = _hexfloat(top["sigma"][1], top["sigma"][0])
    bias = _hexfloat(top["bias"][1], top["bias"][0])
    if count != n ** d:
        raise ModelParseError(pos + 1, f"weights count {count} != n^d = {n ** d}")

    try:
        report = GuaranteeReport(**guar)
    except TypeError as exc:
        raise ModelParseError(0, f"bad guarantee section: {exc}") from None
    params = FeatureMapParams(d=d, n=n, sigma=sigma, delta=float(prov.get("delta", math.nan)))
    diag = SolverDiagnostics(
        iterations=prov.get("solver.iterations", 0),
        kkt_gap=prov.get("solver.kkt_gap", math.nan),
        max_violation=prov.get("solver.max_violation", math.nan),
        margin=prov.get("solver.margin", math.nan),
        support_vectors=prov.get("solver.support_vectors", 0),
    )
    model = LinearModel(w=weights, b=bias, diagnostics=diag)
    return TrainedLcd(model=model, featuremap=params, guarantee=report,
                      mode=top["mode"][1], provenance=prov)


def load_model(source):
    if hasattr(source, "read"):
        return loads(source.read())
    return loads(Path(source).read_bytes())
