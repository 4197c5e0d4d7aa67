import hashlib
import json
import re
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from .exceptions import DataFormatError
from .fock import DensityMatrix, WignerGrid

PathLike = Union[str, Path]

TABLE_I_DIR = Path(__file__).resolve().parent.parent / "data" / "table_i"
TABLE_I_LABELS = ("a", "b", "c")

# Column layout of every CSV artifact
SCHEMAS: Dict[str, List[str]] = {
    "sweep": ["R", "fidelity", "alpha", "z", "squeezing_db"],
    "wigner": ["x", "p", "w"],
    "quadratures": ["x", "theta"],
    "decay": ["n_stor", "fidelity"],
}

_PARSER_LINE = re.compile(r"line (\d+)")


def parse_matrix_text(text: str) -> np.ndarray:
    """Parse whitespace-separated complex entries, one matrix row per line.

    Entries use Python complex syntax ("0.09+0.01j", "-0.01j"); an ``i``
    suffix is accepted as well. Blank lines and ``#`` comments are skipped.
    """
    rows = []
    row_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            rows.append([complex(token.replace("i", "j")) for token in line.replace(",", " ").split()])
        except ValueError as e:
            raise DataFormatError(f"cannot parse matrix entry ({e})", line=lineno)
        row_lines.append(lineno)

    if not rows:
        raise DataFormatError("no matrix rows found")
    size = len(rows)
    for row, lineno in zip(rows, row_lines):
        if len(row) != size:
            raise DataFormatError(
                f"matrix is not square: {size} rows but {len(row)} entries", line=lineno
            )
    return np.array(rows, dtype=complex)


def sha256_file(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ArtifactLoader:
    """Reads and writes every file format the toolkit produces or consumes."""

    # ------------------------------------------------------------------ JSON

    def write_json(self, payload: Dict[str, Any], path: PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(payload, f, indent=2)
        return path

    def read_json(self, path: PathLike) -> Dict[str, Any]:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"file not found: {path}")
        try:
            with open(path) as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise DataFormatError(f"{path}: invalid JSON ({e.msg})", line=e.lineno)

    def read_density_matrix(self, path: PathLike) -> DensityMatrix:
        """Density matrix from a state JSON, a report containing ``state``, or matrix text."""
        path = Path(path)
        if path.suffix.lower() != ".json":
            return DensityMatrix(self.read_matrix(path))
        data = self.read_json(path)
        if "state" in data and isinstance(data["state"], dict):
            data = data["state"]
        try:
            return DensityMatrix.from_dict(data)
        except KeyError as e:
            raise DataFormatError(f"{path}: missing density-matrix field {e}")

    # ------------------------------------------------------------ matrices

    def read_matrix(self, path: PathLike) -> np.ndarray:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"file not found: {path}")
        return parse_matrix_text(path.read_text())

    def table_i_path(self, label: str) -> Path:
        if label not in TABLE_I_LABELS:
            raise ValueError(f"unknown Table I matrix '{label}' (choose from {', '.join(TABLE_I_LABELS)})")
        return TABLE_I_DIR / f"rho_{label}.txt"

    def read_table_i(self, label: str) -> np.ndarray:
        return self.read_matrix(self.table_i_path(label))

    # ---------------------------------------------------------------- CSV

    def write_csv(self, frame: pd.DataFrame, path: PathLike, schema: str) -> Path:
        expected = SCHEMAS[schema]
        if list(frame.columns) != expected:
            raise DataFormatError(f"{schema} frame has columns {list(frame.columns)}, expected {expected}")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.10g")
        return path

    def read_csv(self, path: PathLike, schema: str) -> pd.DataFrame:
        """Load a CSV artifact and check header and numeric content.

        Errors carry the 1-based file line of the first offending row.
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"file not found: {path}")
        expected = SCHEMAS[schema]
        try:
            frame = pd.read_csv(path, dtype=str, skip_blank_lines=True, comment="#")
        except pd.errors.EmptyDataError:
            raise DataFormatError(f"{path}: empty file", line=1)
        except pd.errors.ParserError as e:
            match = _PARSER_LINE.search(str(e))
            raise DataFormatError(
                f"{path}: wrong number of fields", line=int(match.group(1)) if match else None
            )

        columns = [c.strip() for c in frame.columns]
        if columns != expected:
            raise DataFormatError(f"{path}: header {','.join(columns)} != {','.join(expected)}", line=1)
        frame.columns = columns

        numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
        bad = numeric.isna().any(axis=1) | ~np.isfinite(numeric.to_numpy(dtype=float)).all(axis=1)
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataFormatError(
                f"{path}: non-numeric or missing value in row {frame.iloc[row].tolist()}",
                line=self._file_line(path, row),
            )
        return numeric

    @staticmethod
    def _file_line(path: Path, row: int) -> int:
        """File line of data row ``row`` (0-based), skipping blanks and comments."""
        seen = -1
        with open(path) as f:
            for lineno, raw in enumerate(f, start=1):
                stripped = raw.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                if seen == row:
                    return lineno
                seen += 1
        return row + 2

    # ------------------------------------------------------- typed helpers

    def write_wigner(self, grid: WignerGrid, path: PathLike) -> Path:
        return self.write_csv(grid.to_frame(), path, "wigner")

    def read_wigner(self, path: PathLike) -> WignerGrid:
        frame = self.read_csv(path, "wigner")
        x_size = frame["x"].nunique()
        p_size = frame["p"].nunique()
        if x_size * p_size != len(frame):
            raise DataFormatError(f"{path}: {len(frame)} rows do not form a {x_size}x{p_size} grid")
        return WignerGrid.from_frame(frame)

    def write_quadratures(self, x: Sequence[float], theta: Sequence[float], path: PathLike) -> Path:
        frame = pd.DataFrame({"x": np.asarray(x, dtype=float), "theta": np.asarray(theta, dtype=float)})
        return self.write_csv(frame, path, "quadratures")

    def read_quadratures(self, path: PathLike):
        """(x, theta) arrays from a quadrature CSV."""
        frame = self.read_csv(path, "quadratures")
        if frame.empty:
            raise DataFormatError(f"{path}: no quadrature records")
        return frame["x"].to_numpy(), frame["theta"].to_numpy()

    def write_decay_points(self, points: Sequence, path: PathLike) -> Path:
        frame = pd.DataFrame(list(points), columns=SCHEMAS["decay"])
        return self.write_csv(frame, path, "decay")

    def read_decay_points(self, path: PathLike):
        frame = self.read_csv(path, "decay")
        return [(int(n), float(f)) for n, f in zip(frame["n_stor"], frame["fidelity"])]


loader = ArtifactLoader()
