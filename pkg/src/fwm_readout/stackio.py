"""FWMSTACK1 frame-stack file format.

Layout: an ASCII header of ``key=value`` lines opened by the magic line
``FWMSTACK1`` and closed by ``end_header``, followed immediately by the raw
frames in shot order, row-major within a frame: little-endian float32 in
linear mode, little-endian uint16 in counting mode.  The header carries the
full detection, sensor, geometry and efficiency parameters plus the
injected ground-truth gain components, so an analysis never needs the
original run configuration.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import StackFormatError
from .geometry import BeamGeometry, SensorMap, SpinWaveMode
from .model import ReadoutComponents
from .simulate import (
    DEFAULT_CHUNK_SHOTS,
    DetectionModel,
    EfficiencyModel,
    FrameStack,
    SimulationSpec,
    StackMeta,
    _stack_meta,
    iter_simulated_chunks,
)

MAGIC = "FWMSTACK1"
FORMAT_VERSION = 1

_DTYPES = {"linear": np.dtype("<f4"), "counting": np.dtype("<u2")}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def header_bytes(meta: StackMeta) -> bytes:
    """Serialize stack metadata; key order is fixed for byte stability."""
    det, sen, geo, eff, tru = meta.detection, meta.sensor, meta.geometry, meta.efficiency, meta.gains_used
    pairs = [
        ("format", FORMAT_VERSION),
        ("shots", meta.shots),
        ("pixels_x", sen.pixels_x),
        ("pixels_y", sen.pixels_y),
        ("mode", meta.mode),
        ("seed", meta.seed),
        ("mean_nb", float(meta.mean_nb)),
        ("crosstalk", meta.crosstalk),
        ("spot_sigma_px", float(meta.spot_sigma_px)),
        ("detection.t_ws", det.t_ws),
        ("detection.t_ra", det.t_ra),
        ("detection.t_rs", det.t_rs),
        ("detection.qe", det.qe),
        ("detection.kappa", det.kappa),
        ("sensor.pitch", sen.pitch),
        ("sensor.read_center_x", sen.read_center[0]),
        ("sensor.read_center_y", sen.read_center[1]),
        ("sensor.write_center_x", sen.write_center[0]),
        ("sensor.write_center_y", sen.write_center[1]),
        ("sensor.region_radius", sen.region_radius),
        ("geometry.wavelength", geo.wavelength),
        ("geometry.theta", geo.theta),
        ("efficiency.eta_w", eff.eta_w),
        ("efficiency.eta_r", eff.eta_r),
        ("truth.gbar_ra", tru.g_ra),
        ("truth.sbar_ra", tru.s_ra),
        ("truth.gbar_rs", tru.g_rs),
        ("truth.sbar_rs", tru.s_rs),
        ("modes", ";".join(f"{repr(m.kx)} {repr(m.ky)}" for m in meta.modes)),
    ]
    lines = [MAGIC] + [f"{k}={_fmt(v)}" for k, v in pairs] + ["end_header", ""]
    return "\n".join(lines).encode("ascii")


def _parse_header(fh: io.BufferedReader) -> tuple[StackMeta, int]:
    magic = fh.readline().rstrip(b"\n")
    if magic != MAGIC.encode("ascii"):
        raise StackFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    fields: dict[str, str] = {}
    while True:
        line = fh.readline()
        if not line:
            raise StackFormatError("unterminated header (missing end_header)")
        line = line.rstrip(b"\n")
        if line == b"end_header":
            break
        try:
            key, value = line.decode("ascii").split("=", 1)
        except ValueError as exc:
            raise StackFormatError(f"malformed header line {line!r}") from exc
        fields[key] = value
    offset = fh.tell()
    try:
        if int(fields["format"]) != FORMAT_VERSION:
            raise StackFormatError(f"unsupported format version {fields['format']}")
        mode = fields["mode"]
        if mode not in _DTYPES:
            raise StackFormatError(f"unknown mode {mode!r}")
        sensor = SensorMap(
            pixels_x=int(fields["pixels_x"]),
            pixels_y=int(fields["pixels_y"]),
            pitch=float(fields["sensor.pitch"]),
            write_center=(int(fields["sensor.write_center_x"]), int(fields["sensor.write_center_y"])),
            read_center=(int(fields["sensor.read_center_x"]), int(fields["sensor.read_center_y"])),
            region_radius=float(fields["sensor.region_radius"]),
        )
        detection = DetectionModel(
            t_ws=float(fields["detection.t_ws"]),
            t_ra=float(fields["detection.t_ra"]),
            t_rs=float(fields["detection.t_rs"]),
            qe=float(fields["detection.qe"]),
            kappa=float(fields["detection.kappa"]),
            mode=mode,
        )
        modes = tuple(
            SpinWaveMode(*(float(part) for part in chunk.split()))
            for chunk in fields["modes"].split(";")
            if chunk
        )
        meta = StackMeta(
            shots=int(fields["shots"]),
            mode=mode,
            seed=int(fields["seed"]),
            detection=detection,
            sensor=sensor,
            geometry=BeamGeometry(
                wavelength=float(fields["geometry.wavelength"]),
                theta=float(fields["geometry.theta"]),
            ),
            efficiency=EfficiencyModel(
                eta_w=float(fields["efficiency.eta_w"]),
                eta_r=float(fields["efficiency.eta_r"]),
            ),
            mean_nb=float(fields["mean_nb"]),
            modes=modes,
            crosstalk=fields["crosstalk"] == "1",
            spot_sigma_px=float(fields["spot_sigma_px"]),
            gains_used=ReadoutComponents(
                g_ra=float(fields["truth.gbar_ra"]),
                s_ra=float(fields["truth.sbar_ra"]),
                g_rs=float(fields["truth.gbar_rs"]),
                s_rs=float(fields["truth.sbar_rs"]),
            ),
        )
    except KeyError as exc:
        raise StackFormatError(f"missing header field {exc}") from exc
    return meta, offset


@dataclass
class StackReader:
    """Chunked, memory-mapped access to a frame-stack file."""

    path: str
    meta: StackMeta
    _frames: np.memmap

    @property
    def shots(self) -> int:
        return self.meta.shots

    @property
    def detection(self) -> DetectionModel:
        return self.meta.detection

    @property
    def sensor(self) -> SensorMap:
        return self.meta.sensor

    @property
    def gains_used(self) -> ReadoutComponents:
        return self.meta.gains_used

    def iter_chunks(self, chunk_shots: int = DEFAULT_CHUNK_SHOTS):
        for start in range(0, self.meta.shots, chunk_shots):
            yield start, self._frames[start : start + chunk_shots]

    def read_all(self) -> FrameStack:
        sen = self.meta.sensor
        frames = np.array(self._frames).reshape(self.meta.shots, sen.pixels_y, sen.pixels_x)
        return FrameStack(meta=self.meta, frames=frames)


def open_stack(path) -> StackReader:
    """Open a FWMSTACK1 file for chunked reading."""
    with open(path, "rb") as fh:
        meta, offset = _parse_header(fh)
        fh.seek(0, io.SEEK_END)
        end = fh.tell()
    dtype = _DTYPES[meta.mode]
    n_pix = meta.sensor.n_pixels
    expected = meta.shots * n_pix * dtype.itemsize
    if end - offset != expected:
        raise StackFormatError(
            f"payload size {end - offset} does not match shots*pixels ({expected})"
        )
    frames = np.memmap(path, dtype=dtype, mode="r", offset=offset, shape=(meta.shots, n_pix))
    return StackReader(path=str(path), meta=meta, _frames=frames)


def read_stack(path) -> FrameStack:
    """Load an entire FWMSTACK1 file into memory."""
    return open_stack(path).read_all()


def save_stack(stack: FrameStack, path) -> None:
    """Write an in-memory stack to a FWMSTACK1 file."""
    dtype = _DTYPES[stack.meta.mode]
    with open(path, "wb") as fh:
        fh.write(header_bytes(stack.meta))
        fh.write(np.ascontiguousarray(stack.frames, dtype=dtype).tobytes())


def write_stack_file(
    spec: SimulationSpec,
    path,
    threads: int = 1,
    chunk_shots: int = DEFAULT_CHUNK_SHOTS,
    backend=None,
) -> StackMeta:
    """Simulate a run and stream it to disk chunk by chunk.

    Output bytes depend only on (seed, spec); thread count and chunk size
    are free to vary.
    """
    meta = _stack_meta(spec)
    dtype = _DTYPES[meta.mode]
    with open(path, "wb") as fh:
        fh.write(header_bytes(meta))
        for _, chunk in iter_simulated_chunks(spec, threads, chunk_shots, backend):
            fh.write(np.ascontiguousarray(chunk, dtype=dtype).tobytes())
    return meta
