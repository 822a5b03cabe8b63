import time
from pathlib import Path

from circuits.operations import CircuitNoise
from circuits.services import CircuitService
from core.commands import SpoqcCommand
from core.services import OutputService
from decoding.services import DecoderService

from ...services import FrameService


class Command(SpoqcCommand):
    help = "Sample raw shots of one memory experiment and dump them in the binary shot format."

    sampling = True

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--distance", type=int, help="Code distance")
        parser.add_argument("--rounds", type=int, help="Syndrome rounds (default: d)")
        parser.add_argument("--basis", choices=["Z", "X"])
        self.add_noise_arguments(parser)
        parser.add_argument("--dump", help="Binary shot dump destination")
        parser.add_argument("--circuit", help="Write the circuit text here")
        parser.add_argument("--graph", help="Write the matching graph JSON here")
        parser.add_argument("--json", help="Write the run summary here (default: stdout)")

    def overrides(self, options):
        distance = options.get("distance")
        return {
            **super().overrides(options),
            "code": {
                "distances": [distance] if distance else None,
                "rounds": options.get("rounds"),
                "basis": options.get("basis"),
            },
            "noise": self.noise_overrides(options),
            "output": {"dump": options.get("dump"), "json": options.get("json")},
        }

    def run(self, config, options):
        distance = config["code"]["distances"][0]
        noise = CircuitNoise.from_config(config["noise"])
        circuit = CircuitService.build_memory_experiment(
            distance,
            basis=config["code"]["basis"],
            rounds=config["code"]["rounds"] or distance,
            noise=noise,
        )
        if options.get("circuit"):
            path = Path(options["circuit"])
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(circuit.to_text())
        if options.get("graph"):
            OutputService.write_json(DecoderService.matching_graph_for(circuit).to_json(), options["graph"])

        started = time.perf_counter()
        batch = FrameService.sample_batch(
            circuit, config["shots"], config["seed"], workers=config["workers"]
        )
        elapsed = time.perf_counter() - started
        output = config["output"]
        if output["dump"]:
            FrameService.write_dump(batch, output["dump"])
        self.stderr.write(
            f"d={distance}: {len(batch)} shots, {batch.detector_count} detectors, "
            f"{batch.herald_count} heralds in {elapsed:.2f}s"
        )
        self.emit_json(
            self.summary(
                config,
                distance=distance,
                rounds=circuit.rounds,
                detectors=batch.detector_count,
                heralds=batch.herald_count,
                noise={
                    "p_F": noise.p_F,
                    "D": noise.D,
                    "t_rus_over_T2": noise.t_rus_over_T2,
                    "t_rus_over_T1": noise.t_rus_over_T1,
                },
                detection_fraction=float(batch.detectors.mean()) if batch.detector_count else 0.0,
                observable_flips=int(batch.observables.sum()),
                heralds_fired=int(batch.heralds.sum()),
            ),
            output["json"],
        )
