"""Peak lists, binned spectra, MSP text records, and spectral similarity.

Spectra are held on a fixed integer m/z grid of ``M_MAX`` one-Dalton bins.
Bin ``k`` (1-based, 1..1000) collects every peak whose m/z rounds to ``k``;
index ``k - 1`` addresses it in the underlying array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

M_MAX = 1000

BASEPEAK_SCALE = 999.0


class SpectrumError(ValueError):
    """Base class for spectrum handling failures."""

class FormatError(SpectrumError):
    """Malformed MSP text.  Carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OutOfRangeError(SpectrumError):
    """A peak rounds to a bin outside 1..M_MAX."""


class ZeroSpectrumError(SpectrumError):
    """An all-zero spectrum where a direction is required."""


class LengthMismatchError(SpectrumError):
    """Paired spectrum collections of different lengths."""


@dataclass
class PeakList:
    """One MSP record: named metadata plus (m/z, intensity) pairs."""

    peaks: list[tuple[float, float]] = field(default_factory=list)
    name: str = ""
    compound_id: str = ""
    precursor_mz: float | None = None
    extra: dict[str, str] = field(default_factory=dict)


@dataclass
class Spectrum:
    """A binned spectrum: ``bins[k]`` is the intensity of 1-based bin k+1."""

    bins: np.ndarray

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.float64)
        if self.bins.shape != (M_MAX,):
            raise SpectrumError(f"spectrum must have exactly {M_MAX} bins")

    @classmethod
    def zeros(cls) -> "Spectrum":
        return cls(np.zeros(M_MAX, dtype=np.float64))

    def total_intensity(self) -> float:
        return float(self.bins.sum())

    def nonzero_bins(self) -> list[tuple[int, float]]:
        """(1-based bin, intensity) pairs for every populated bin."""
        return [(int(i) + 1, float(self.bins[i])) for i in np.flatnonzero(self.bins)]


def mz_bin(mz: float) -> int:
    """1-based bin for an m/z value: round-half-up to the nearest Dalton."""
    return int(math.floor(mz + 0.5))


def bin_spectrum(peaks: PeakList) -> Spectrum:
    """Accumulate a peak list onto the integer grid.

    Total intensity is conserved exactly up to float addition.  Raises
    :class:`OutOfRangeError` when any peak rounds outside 1..M_MAX.
    """
    bins = np.zeros(M_MAX, dtype=np.float64)
    for mz, intensity in peaks.peaks:
        k = mz_bin(mz)
        if k < 1 or k > M_MAX:
            raise OutOfRangeError(f"peak at m/z {mz} rounds to bin {k}, outside 1..{M_MAX}")
        bins[k - 1] += intensity
    return Spectrum(bins)


def normalize(spectrum: Spectrum, mode: str = "l2") -> Spectrum:
    """Rescale a spectrum: unit Euclidean norm, or base peak at 999.

    Raises :class:`ZeroSpectrumError` when the spectrum has no intensity.
    """
    if mode == "l2":
        norm = float(np.linalg.norm(spectrum.bins))
        if norm <= 0.0:
            raise ZeroSpectrumError("cannot l2-normalize an all-zero spectrum")
        return Spectrum(spectrum.bins / norm)
    if mode == "basepeak":
        peak = float(spectrum.bins.max())
        if peak <= 0.0:
            raise ZeroSpectrumError("cannot basepeak-normalize an all-zero spectrum")
        return Spectrum(spectrum.bins * (BASEPEAK_SCALE / peak))
    raise ValueError(f"unknown normalization mode {mode!r}")


def cosine_similarity(a: Spectrum, b: Spectrum) -> float:
    """Cosine of the angle between two spectra, clipped into [0, 1].

    Both spectra are nonnegative by construction, so the raw value already
    lies in [0, 1]; clipping only absorbs float round-off.  Raises
    :class:`ZeroSpectrumError` if either spectrum is all-zero.
    """
    norm_a = float(np.linalg.norm(a.bins))
    norm_b = float(np.linalg.norm(b.bins))
    if norm_a <= 0.0 or norm_b <= 0.0:
        raise ZeroSpectrumError("cosine similarity is undefined for an all-zero spectrum")
    value = float(np.dot(a.bins, b.bins)) / (norm_a * norm_b)
    return min(1.0, max(0.0, value))


def cosine_distance(a: Spectrum, b: Spectrum) -> float:
    return 1.0 - cosine_similarity(a, b)


_HEADER_ALIASES = {
    "name": "name",
    "id": "compound_id",
    "precursormz": "precursor_mz",
    "precursor_mz": "precursor_mz",
}


def parse_msp(lines) -> list[PeakList]:
    """Parse MSP records from an iterable of text lines.

    A record is ``Key: Value`` header lines, a ``Num Peaks: N`` line, then N
    whitespace- or semicolon-separated (m/z, intensity) pairs; records are
    separated by blank lines.  Unknown header keys are preserved in
    ``extra``.  Raises :class:`FormatError` with a line number on malformed
    input, peak-count mismatches, or negative values.
    """
    records: list[PeakList] = []
    current: PeakList | None = None
    expected: int | None = None
    collected = 0
    last_line = 0

    def finish(lineno: int) -> None:
        nonlocal current, expected, collected
        if current is None:
            return
        if expected is None:
            raise FormatError("record has no 'Num Peaks' line", lineno)
        if collected != expected:
            raise FormatError(
                f"expected {expected} peaks, found {collected}", lineno
            )
        records.append(current)
        current, expected, collected = None, None, 0

    for lineno, raw in enumerate(lines, start=1):
        last_line = lineno
        line = raw.strip()
        if not line:
            finish(lineno)
            continue
        if expected is not None:
            # Inside the peak block: every line is m/z, intensity pairs.
            tokens = line.replace(";", " ").replace(",", " ").split()
            if len(tokens) % 2 != 0:
                raise FormatError(f"odd number of peak values: {line!r}", lineno)
            for mz_text, int_text in zip(tokens[::2], tokens[1::2]):
                try:
                    mz, intensity = float(mz_text), float(int_text)
                except ValueError:
                    raise FormatError(f"bad peak pair {mz_text!r} {int_text!r}", lineno)
                if mz <= 0.0:
                    raise FormatError(f"non-positive m/z {mz}", lineno)
                if intensity < 0.0:
                    raise FormatError(f"negative intensity {intensity}", lineno)
                current.peaks.append((mz, intensity))
                collected += 1
                if collected > expected:
                    raise FormatError(
                        f"more than the declared {expected} peaks", lineno
                    )
            continue
        if ":" not in line:
            raise FormatError(f"expected 'Key: Value' header, got {line!r}", lineno)
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if current is None:
            current = PeakList()
        if key.lower() in ("num peaks", "numpeaks"):
            try:
                expected = int(value)
            except ValueError:
                raise FormatError(f"bad peak count {value!r}", lineno)
            if expected < 0:
                raise FormatError(f"negative peak count {expected}", lineno)
            collected = 0
            continue
        field_name = _HEADER_ALIASES.get(key.lower())
        if field_name == "precursor_mz":
            try:
                current.precursor_mz = float(value)
            except ValueError:
                raise FormatError(f"bad precursor m/z {value!r}", lineno)
        elif field_name is not None:
            setattr(current, field_name, value)
        else:
            current.extra[key] = value
    finish(last_line + 1)
    return records


def write_msp(records, stream) -> None:
    """Write MSP records: m/z with 4 decimals, intensities with 2."""
    for record in records:
        if record.name:
            stream.write(f"Name: {record.name}\n")
        if record.compound_id:
            stream.write(f"ID: {record.compound_id}\n")
        if record.precursor_mz is not None:
            stream.write(f"PrecursorMZ: {record.precursor_mz:.4f}\n")
        for key, value in record.extra.items():
            stream.write(f"{key}: {value}\n")
        stream.write(f"Num Peaks: {len(record.peaks)}\n")
        for mz, intensity in record.peaks:
            stream.write(f"{mz:.4f} {intensity:.2f}\n")
        stream.write("\n")


def read_msp_file(path) -> list[PeakList]:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_msp(handle)


def write_msp_file(records, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        write_msp(records, handle)


def spectrum_to_peaklist(spectrum: Spectrum, name: str = "", compound_id: str = "") -> PeakList:
    """Export nonzero bins as integer-m/z peaks."""
    peaks = [(float(k), intensity) for k, intensity in spectrum.nonzero_bins()]
    return PeakList(peaks=peaks, name=name, compound_id=compound_id)
