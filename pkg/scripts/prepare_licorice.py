"""Rebuild the bundled licorice CSVs from the R ``medicaldata::licorice_gargle`` table.

The source table ships with the ``rdatasets`` wheel. Run once; the outputs are
committed under ``src/pnbounds/datasets``.

    pip install rdatasets pandas
    python scripts/prepare_licorice.py
"""
from pathlib import Path

import rdatasets

OUT = Path(__file__).resolve().parents[1] / "src" / "pnbounds" / "datasets"
COVARIATES = ["preOp_asa", "preOp_calcBMI", "preOp_mallampati", "preOp_pain"]
OUTCOMES = {1: "pacu30min_throatPain", 2: "pacu90min_throatPain", 3: "postOp4hour_throatPain"}


def main():
    raw = rdatasets.data("medicaldata", "licorice_gargle")
    cols = COVARIATES + ["treat"] + list(OUTCOMES.values())
    df = raw[cols].dropna().reset_index(drop=True)
    assert len(df) == 233
    for j, col in OUTCOMES.items():
        out = df[COVARIATES].copy()
        # x = 1 for sugar-water (treat == 0), y = 1 for any sore-throat pain at rest
        out.insert(0, "y", (df[col] > 0).astype(int))
        out.insert(0, "x", (1 - df["treat"]).astype(int))
        out.columns = ["x", "y", "asa", "bmi", "mallampati", "pain"]
        out.to_csv(OUT / f"licorice_y{j}.csv", index=False)


if __name__ == "__main__":
    main()
