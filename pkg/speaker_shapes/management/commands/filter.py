from ...application.use_cases import FilterTrialsCommand, FilterTrialsUseCase
from ..base import SpeakerShapesCommand


class Command(SpeakerShapesCommand):
    help = (
        "Elimina los ensayos con algún landmark a más de THRESHOLD desviaciones "
        "absolutas medianas de la mediana de su hablante. Escribe el CSV filtrado, "
        "un reporte <salida>.removals.json y un manifiesto."
    )

    def add_arguments(self, parser):
        parser.add_argument("--input", required=True, help="CSV de landmarks de entrada")
        parser.add_argument("--output", required=True, help="CSV filtrado de salida")
        parser.add_argument(
            "--threshold",
            type=float,
            default=None,
            help="Umbral en unidades de MAD (por defecto ARTICULATORY_LR_MAD_THRESHOLD o 3.5; 'inf' desactiva)",
        )

    def run(self, **options):
        threshold = options["threshold"]
        if threshold is None:
            threshold = self.tuning["MAD_THRESHOLD"]

        use_case = FilterTrialsUseCase(self.repository, self.event_publisher)
        outcome = use_case.execute(FilterTrialsCommand(
            input_path=options["input"],
            output_path=options["output"],
            threshold=threshold,
        ))

        report = outcome.report
        self.stdout.write(
            f"removed {len(report.removed)}/{report.total} ({100.0 * report.fraction:.1f}%)"
        )
