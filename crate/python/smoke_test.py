#!/usr/bin/env python3
"""Smoke test for the lifetag Python extension module.

Builds the cdylib with cargo if needed, copies it next to this script as
an importable module, and exercises the main types and operations:
tokenization, the rule-based weak labeler, and the metrics.

Run from the repo root (or anywhere):  python3 python/smoke_test.py
"""

import shutil
import subprocess
import sys
import sysconfig
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
HERE = Path(__file__).resolve().parent


def build_extension() -> Path:
    """Build crates/py and return the path to the importable module."""
    ext = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    target = HERE / f"lifetag{ext}"
    built = REPO_ROOT / "target" / "debug" / "liblifetag.so"
    if sys.platform == "darwin":
        built = REPO_ROOT / "target" / "debug" / "liblifetag.dylib"

    if not target.exists() or (built.exists() and built.stat().st_mtime > target.stat().st_mtime):
        subprocess.run(
            ["cargo", "build", "-p", "lifetag-py"],
            cwd=REPO_ROOT,
            check=True,
        )
        shutil.copy2(built, target)
    return target


def main() -> None:
    build_extension()
    sys.path.insert(0, str(HERE))
    import lifetag

    # tokenization
    tokens = lifetag.tokenize("He didn't maintain daily exercise...")
    assert tokens == ["he", "didn't", "maintain", "daily", "exercise", "..."], tokens

    sentences = lifetag.segment_sentences("Pt. reports walking 2.5 miles daily. She swims.")
    assert len(sentences) == 2, sentences

    # rule-based weak labeling on the documented example sentences
    lex = lifetag.Lexicon.builtin()
    assert len(lex) > 0
    cases = [
        ("Pt is having fatty food", "excess_diet", "high_fat"),
        ("He had took high calorie diet for two weeks", "excess_diet", "high_calorie"),
        ("His current diet contains too much food with high salt..", "excess_diet", "high_salt"),
        ("She backs to normal diet", "excess_diet", "normal_none"),
        ("Pt has increase regular physical activity", "physical_activity", "activity"),
        ("He didn't maintain daily exercise", "physical_activity", "inactivity"),
        ("The patient was very physically inactive", "physical_activity", "inactivity"),
        (
            "Patient continues to be physically active without doing any aerobic exercise "
            "outside of cardiac rehab",
            "physical_activity",
            "activity",
        ),
        ("history of cocaine abuse and acute syphilis", "excess_diet", None),
    ]
    for text, case, expected in cases:
        got = lex.weak_label(text, case)
        assert got == expected, f"{text!r}: expected {expected}, got {got}"

    # concept matches carry negation flags
    matches = lex.match_concepts("he didn't maintain daily exercise")
    assert any(negated for (_, cat, _, _, negated) in matches if cat == "activity"), matches

    # metrics
    kappa = lifetag.cohens_kappa(["a", "a", "b", "b"], ["a", "a", "b", "b"])
    assert kappa == 1.0, kappa

    report = lifetag.evaluate(
        ["activity", "activity", "inactivity", "inactivity"],
        ["activity", "inactivity", "inactivity", "inactivity"],
    )
    assert abs(report["macro_f1"] - 11.0 / 15.0) < 1e-12, report["macro_f1"]

    # checkpoint inference, when a demo checkpoint exists
    ckpt = REPO_ROOT / "runs" / "diet_demo" / "model.ckpt"
    if ckpt.exists():
        clf = lifetag.Classifier.load(ckpt)
        preds = clf.predict(["Pt is having fatty food", "She backs to normal diet"])
        assert len(preds) == 2 and all(p in clf.classes() for p in preds), preds
        print(f"checkpoint inference OK: {preds}")

    print("smoke test OK")


if __name__ == "__main__":
    main()
