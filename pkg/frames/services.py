import logging
import math
from pathlib import Path

import numpy as np

from circuits.operations import Hadamard, HadamardYZ, MeasureZ, ResetZ, RusCZ
from core.exceptions import DomainError
from core.services import SeedService, WorkerPoolService

from .engine import FrameSimulator
from .records import PauliFrame, ShotBatch

logger = logging.getLogger(__name__)

# Shots per random stream. Record i is drawn in block i // BLOCK_SHOTS from
# the stream (master_seed, block), so it never depends on the batch size.
BLOCK_SHOTS = 1024

DUMP_MAGIC = b"SPQC"
DUMP_HEADER = np.dtype([("detectors", "<u4"), ("heralds", "<u4"), ("shots", "<u4")])


def _sample_block(job):
    circuit, master_seed, block = job
    simulator = FrameSimulator(circuit)
    rng = SeedService.generator(master_seed, block)
    return simulator.run(rng, BLOCK_SHOTS)


class FrameService:
    """Service class for Pauli-frame sampling of syndrome circuits."""

    @staticmethod
    def propagate(frame, op):
        """
        Conjugate a single frame by one Clifford, reset or measurement op.

        Args:
            frame: PauliFrame
            op: ResetZ, Hadamard, HadamardYZ, RusCZ or MeasureZ

        Returns:
            PauliFrame: The propagated frame (measurements leave it unchanged)
        """
        x, z = frame.x_mask.copy(), frame.z_mask.copy()
        if isinstance(op, ResetZ):
            x[op.qubit] = z[op.qubit] = False
        elif isinstance(op, Hadamard):
            x[op.qubit], z[op.qubit] = z[op.qubit], x[op.qubit]
        elif isinstance(op, HadamardYZ):
            x[op.qubit] ^= z[op.qubit]
        elif isinstance(op, RusCZ):
            z[op.data] ^= x[op.check]
            z[op.check] ^= x[op.data]
        elif not isinstance(op, MeasureZ):
            raise DomainError(f"{type(op).__name__} is not a Clifford frame operation")
        return PauliFrame(x, z)

    @staticmethod
    def sample_shot(circuit, rng):
        """
        Sample one shot of a circuit.

        Args:
            circuit: SyndromeCircuit
            rng: numpy Generator

        Returns:
            ShotRecord
        """
        detectors, observable, heralds = FrameSimulator(circuit).run(rng, 1)
        return ShotBatch(detectors, observable, heralds)[0]

    @staticmethod
    def sample_batch(circuit, shots, master_seed, workers=None):
        """
        Sample ``shots`` records reproducibly.

        Record ``i`` depends only on ``(master_seed, i)``; blocks are spread
        over the worker pool and reassembled in order.

        Args:
            circuit: SyndromeCircuit
            shots: Number of shots, at least 1
            master_seed: Non-negative integer seed
            workers: Worker processes; ``None`` uses the configured default

        Returns:
            ShotBatch
        """
        if shots < 1:
            raise DomainError(f"shots must be positive, got {shots!r}")
        blocks = math.ceil(shots / BLOCK_SHOTS)
        results = WorkerPoolService.map_ordered(
            _sample_block, [(circuit, master_seed, block) for block in range(blocks)], workers
        )
        detectors, observables, heralds = (
            np.concatenate([result[part] for result in results])[:shots] for part in range(3)
        )
        logger.debug("Sampled %d shots in %d blocks", shots, blocks)
        return ShotBatch(detectors, observables, heralds)

    @staticmethod
    def block_batch(circuit, master_seed, block, simulator=None):
        """All BLOCK_SHOTS records of one random stream."""
        simulator = simulator or FrameSimulator(circuit)
        return ShotBatch(*simulator.run(SeedService.generator(master_seed, block), BLOCK_SHOTS))

    @staticmethod
    def write_dump(batch, path):
        """
        Write shots in the binary dump format.

        The file starts with ``b"SPQC"`` and three little-endian uint32
        (detector count, herald count, shots), followed by one row per shot
        of packed bits (least significant bit first): the detector bits,
        the observable bit, then the herald bits.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = np.array(
            [(batch.detector_count, batch.herald_count, len(batch))], dtype=DUMP_HEADER
        )
        with path.open("wb") as handle:
            handle.write(DUMP_MAGIC)
            handle.write(header.tobytes())
            handle.write(batch.packed_rows().tobytes())
        logger.info("Wrote %d shots to %s", len(batch), path)
        return path

    @staticmethod
    def read_dump(path):
        """Read a binary dump written by ``write_dump``."""
        payload = Path(path).read_bytes()
        if payload[:4] != DUMP_MAGIC:
            raise DomainError(f"{path} is not a shot dump")
        header = np.frombuffer(payload, dtype=DUMP_HEADER, count=1, offset=4)[0]
        detector_count, herald_count, shots = (int(v) for v in header)
        width = detector_count + 1 + herald_count
        rows = np.frombuffer(payload, dtype=np.uint8, offset=4 + DUMP_HEADER.itemsize)
        bits = np.unpackbits(
            rows.reshape(shots, -1), axis=1, count=width, bitorder="little"
        ).astype(bool)
        return ShotBatch(
            bits[:, :detector_count],
            bits[:, detector_count],
            bits[:, detector_count + 1 :],
        )
