from ...application.use_cases import AnalyseShapesCommand, AnalyseShapesUseCase
from ...domain.entities import AlignmentMode
from ..base import SpeakerShapesCommand


class Command(SpeakerShapesCommand):
    help = (
        "Alinea los ensayos por Procrustes generalizado, ajusta el PCA en el espacio "
        "tangente y escribe formas alineadas, cargas, puntajes, varianza explicada, "
        "formas de efecto a ±3 DE y medias de hablantes extremos."
    )

    def add_arguments(self, parser):
        parser.add_argument("--input", required=True, help="CSV de landmarks (ya filtrado)")
        parser.add_argument("--output", required=True, help="Directorio de salida")
        parser.add_argument(
            "--mode",
            choices=[mode.cli_name for mode in AlignmentMode],
            default=AlignmentMode.SIZE_AND_SHAPE.cli_name,
            help="size-and-shape (GPA parcial) o shape (GPA completo)",
        )
        parser.add_argument("--q", type=int, default=3, help="Número de componentes principales")

    def run(self, **options):
        use_case = AnalyseShapesUseCase(self.repository, self.event_publisher)
        outcome = use_case.execute(AnalyseShapesCommand(
            input_path=options["input"],
            output_dir=options["output"],
            mode=AlignmentMode.parse(options["mode"]),
            q=options["q"],
            tol=self.tuning["GPA_TOLERANCE"],
            max_iter=self.tuning["GPA_MAX_ITER"],
        ))

        if not outcome.aligned.converged:
            self.stderr.write(
                f"warning: GPA did not converge after {outcome.aligned.iterations} iterations"
            )
        explained = ", ".join(
            f"PC{index + 1} {100.0 * ratio:.1f}%"
            for index, ratio in enumerate(outcome.model.explained_ratio)
        )
        self.stdout.write(f"{outcome.aligned.mode.cli_name}: {explained}")
