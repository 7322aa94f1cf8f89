#!/usr/bin/env python3
"""Build the CSV files under data/ from publicly redistributed copies.

Adult and Compas are taken from the `responsibly` wheel, Heart Disease
(Cleveland) from the `orange3` wheel. Both wheels are fetched from PyPI with
`pip download` unless a directory holding them is passed as the first argument.

Bank Marketing (bank-additional-full.csv, 41,188 rows) is not bundled by any
package on PyPI; download it from the UCI repository and place it at
data/bank-additional-full.csv (semicolon separated, as distributed) and run
this script again to convert it to data/bank.csv.
"""

import csv
import glob
import io
import os
import subprocess
import sys
import tempfile
import zipfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]

COMPAS_COLUMNS = [
    "sex", "age", "age_cat", "race", "juv_fel_count", "juv_misd_count",
    "juv_other_count", "priors_count", "c_charge_degree", "c_charge_desc",
    "two_year_recid",
]

HEART_COLUMNS = [
    "age", "sex", "chest_pain", "rest_sbp", "cholesterol", "fasting_blood_sugar",
    "rest_ecg", "max_hr", "exercise_angina", "st_depression", "st_slope",
    "major_vessels", "thal", "disease",
]


def wheel(directory, package):
    matches = glob.glob(os.path.join(directory, f"{package}-*.whl"))
    if not matches:
        subprocess.check_call([
            sys.executable, "-m", "pip", "download", "--no-deps",
            "--only-binary=:all:", "-d", directory, package,
        ])
        matches = glob.glob(os.path.join(directory, f"{package}-*.whl"))
    return zipfile.ZipFile(sorted(matches)[-1])


def write(name, header, rows):
    path = os.path.join(DATA, name)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)
    print(f"{path}: {len(rows)} rows")


def adult(whl):
    rows = []
    for member in ("adult.data", "adult.test"):
        text = whl.read(f"responsibly/dataset/adult/{member}").decode()
        for line in text.splitlines():
            if not line.strip() or line.startswith("|"):
                continue
            fields = [f.strip() for f in line.split(",")]
            fields[-1] = fields[-1].rstrip(".")
            rows.append(fields)
    write("adult.csv", ADULT_COLUMNS, rows)


def compas(whl):
    text = whl.read("responsibly/dataset/compas/compas-scores-two-years.csv").decode()
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        # standard screening filters for the two-year recidivism subset
        days = rec["days_b_screening_arrest"]
        if days == "" or not -30 <= float(days) <= 30:
            continue
        if rec["is_recid"] == "-1" or rec["c_charge_degree"] == "O":
            continue
        if rec["score_text"] == "N/A":
            continue
        if rec["race"] not in ("African-American", "Caucasian"):
            continue
        rows.append([rec[c] for c in COMPAS_COLUMNS])
    write("compas.csv", COMPAS_COLUMNS, rows)


def heart(whl):
    text = whl.read("Orange/datasets/heart_disease.tab").decode()
    lines = text.splitlines()[3:]
    rows = []
    for line in lines:
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split("\t")]
        rows.append(["?" if f == "" else f for f in fields])
    write("heart.csv", HEART_COLUMNS, rows)


def bank():
    src = os.path.join(DATA, "bank-additional-full.csv")
    if not os.path.exists(src):
        print(f"{src} not found; skipping Bank Marketing")
        return
    with open(src, newline="") as fh:
        reader = csv.reader(fh, delimiter=";")
        header = next(reader)
        rows = list(reader)
    write("bank.csv", header, rows)


def main():
    os.makedirs(DATA, exist_ok=True)
    directory = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp()
    responsibly = wheel(directory, "responsibly")
    adult(responsibly)
    compas(responsibly)
    heart(wheel(directory, "orange3"))
    bank()


if __name__ == "__main__":
    main()
