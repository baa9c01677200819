"""Write assets/datasets/wine.csv from the copy of the UCI Wine data bundled with scikit-learn.

The class label is the first column (UCI order); cell text is copied verbatim.
"""
import csv
import pathlib

import sklearn

SRC = pathlib.Path(sklearn.__file__).parent / "datasets" / "data" / "wine_data.csv"
OUT = pathlib.Path(__file__).resolve().parent.parent / "assets" / "datasets" / "wine.csv"

NAMES = [
    "alcohol", "malic_acid", "ash", "alcalinity_of_ash", "magnesium", "total_phenols",
    "flavanoids", "nonflavanoid_phenols", "proanthocyanins", "color_intensity", "hue",
    "od280/od315_of_diluted_wines", "proline",
]


def main():
    with SRC.open() as f:
        rows = list(csv.reader(f))[1:]
    with OUT.open("w", newline="") as f:
        out = csv.writer(f, lineterminator="\n")
        out.writerow(["class"] + NAMES)
        for r in rows:
            out.writerow([str(int(r[-1]) + 1)] + r[:-1])
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
