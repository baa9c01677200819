"""Write assets/datasets/dermatology.csv from the KEEL copy of the UCI Dermatology data.

KEEL only distributes this data as the imbalanced `dermatology-6` problem: the 34 original
features of the 358 complete instances, with the label reduced to class 6 (pityriasis rubra
pilaris) versus the rest. Usage:

    pip download --no-deps -d /tmp/keel keel_ds
    python scripts/export_dermatology.py /tmp/keel/keel_ds-*.whl
"""
import pathlib
import sys
import zipfile

OUT = pathlib.Path(__file__).resolve().parent.parent / "assets" / "datasets" / "dermatology.csv"

NAMES = [
    "erythema", "scaling", "definite_borders", "itching", "koebner_phenomenon",
    "polygonal_papules", "follicular_papules", "oral_mucosal_involvement",
    "knee_and_elbow_involvement", "scalp_involvement", "family_history",
    "melanin_incontinence", "eosinophils_in_the_infiltrate", "pnl_infiltrate",
    "fibrosis_of_the_papillary_dermis", "exocytosis", "acanthosis", "hyperkeratosis",
    "parakeratosis", "clubbing_of_the_rete_ridges", "elongation_of_the_rete_ridges",
    "thinning_of_the_suprapapillary_epidermis", "spongiform_pustule", "munro_microabcess",
    "focal_hypergranulosis", "disappearance_of_the_granular_layer",
    "vacuolisation_and_damage_of_basal_layer", "spongiosis", "saw_tooth_appearance_of_retes",
    "follicular_horn_plug", "perifollicular_parakeratosis",
    "inflammatory_monoluclear_inflitrate", "band_like_infiltrate", "age",
]
LABELS = {"positive": "pityriasis rubra pilaris", "negative": "other"}


def main():
    with zipfile.ZipFile(sys.argv[1]) as z:
        text = z.read("keel_ds/data/imbalanced/raw/dermatology-6.dat").decode()
    rows = [line.split(",") for line in text.splitlines() if line and not line.startswith("@")]
    with OUT.open("w") as f:
        f.write(",".join(NAMES + ["class"]) + "\n")
        for r in rows:
            assert len(r) == len(NAMES) + 1
            f.write(",".join(c.strip() for c in r[:-1]) + "," + LABELS[r[-1].strip()] + "\n")
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
