"""Metrics rows and the stable CSV schema used by every runner."""

from dataclasses import dataclass

CSV_HEADER = "experiment,seed,step,metric,value,wall_s"


@dataclass(frozen=True)
class MetricsRecord:
    """One appended results row; ``wall_s`` is the only nondeterministic field."""

    experiment: str
    seed: int
    step: int
    metric: str
    value: float
    wall_s: float

    def csv_row(self):
        return (
            f"{self.experiment},{self.seed},{self.step},"
            f"{self.metric},{self.value!r},{self.wall_s:.3f}"
        )


def write_metrics_csv(path, records):
    """Write records with the documented header, UTF-8, LF line endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
