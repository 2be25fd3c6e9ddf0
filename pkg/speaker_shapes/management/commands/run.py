from pathlib import Path

from ...application.use_cases import RunExperimentCommand, RunExperimentUseCase
from ...domain.exceptions import InvalidConfiguration
from ...infrastructure.config import read_config
from ...serializer import (
    ExperimentSerializer,
    PopulationOptionsSerializer,
    experiment_configs,
    synthetic_spec,
    validated,
)
from ..base import SpeakerShapesCommand


SECTIONS = ("experiment", "population", "synthetic")


class Command(SpeakerShapesCommand):
    help = (
        "Ejecuta el experimento de discriminación de hablantes descrito en un archivo "
        "de configuración (claves experiment.*, population.* y opcionalmente synthetic.*). "
        "Escribe metrics.csv, metrics.json, scores.csv, tippett.csv, "
        "speaker_correlations.csv y manifest.json."
    )

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Archivo de configuración")
        parser.add_argument("--seed", type=int, default=None, help="Reemplaza experiment.seed")
        parser.add_argument("--output", default=None, help="Reemplaza experiment.output")

    def run(self, **options):
        config = read_config(options["config"])
        unknown = sorted(set(config.sections) - set(SECTIONS))
        if unknown:
            raise InvalidConfiguration(unknown[0], "sección desconocida")

        snapshot = config.snapshot()
        experiment_section = config.section("experiment")
        if options["seed"] is not None:
            experiment_section["seed"] = str(options["seed"])
            snapshot["experiment.seed"] = str(options["seed"])

        experiment = validated(ExperimentSerializer, "experiment", experiment_section)
        population = validated(PopulationOptionsSerializer, "population", config.section("population"))

        input_path = None
        spec = None
        if "input" in experiment:
            input_path = str(config.resolve(experiment["input"]))
        elif config.section("synthetic"):
            spec = synthetic_spec(config.section("synthetic"))
        else:
            raise InvalidConfiguration("experiment.input", "se requiere un dataset o una sección synthetic")

        output = Path(options["output"]) if options["output"] else config.resolve(experiment["output"])
        use_case = RunExperimentUseCase(self.repository, self.event_publisher)
        outcome = use_case.execute(RunExperimentCommand(
            input_path=input_path,
            output_dir=str(output),
            configs=experiment_configs(experiment, population, self.tuning),
            synthetic=spec,
            config_snapshot=snapshot,
            tol=self.tuning["GPA_TOLERANCE"],
            max_iter=self.tuning["GPA_MAX_ITER"],
            max_workers=self.tuning["MAX_WORKERS"],
        ))

        for mode, results in outcome.results.items():
            for result in results:
                self.stdout.write(
                    f"{mode.cli_name} {result.label}: "
                    f"EER {result.metrics.eer_percent:.2f}% Cllr {result.metrics.cllr:.3f}"
                )
