from ...application.use_cases import GenerateSyntheticCommand, GenerateSyntheticUseCase
from ...domain.exceptions import InvalidConfiguration
from ...infrastructure.config import read_config
from ...serializer import synthetic_spec
from ..base import SpeakerShapesCommand


class Command(SpeakerShapesCommand):
    help = (
        "Genera un dataset sintético jerárquico (efectos de hablante, vocal y ensayo "
        "sobre modos de deformación de una forma base) a partir de las claves synthetic.*."
    )

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Archivo con la especificación synthetic.*")
        parser.add_argument("--output", required=True, help="CSV de salida")
        parser.add_argument("--seed", type=int, default=None, help="Reemplaza synthetic.seed")

    def run(self, **options):
        config = read_config(options["config"])
        unknown = sorted(set(config.sections) - {"synthetic"})
        if unknown:
            raise InvalidConfiguration(unknown[0], "sección desconocida")

        section = config.section("synthetic")
        snapshot = config.snapshot()
        if options["seed"] is not None:
            section["seed"] = str(options["seed"])
            snapshot["synthetic.seed"] = str(options["seed"])

        use_case = GenerateSyntheticUseCase(self.repository, self.event_publisher)
        outcome = use_case.execute(GenerateSyntheticCommand(
            spec=synthetic_spec(section),
            output_path=options["output"],
            spec_snapshot=snapshot,
        ))

        dataset = outcome.dataset
        self.stdout.write(
            f"wrote {len(dataset)} trials ({len(dataset.speakers)} speakers, k={dataset.landmark_count})"
        )
