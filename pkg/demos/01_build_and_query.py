"""Build a Bayesian network, query it, and make two entries tunable.

The model is a diagnostic screening pipeline: an infection node, a symptom
indicator, and two tests of different quality.  We ask how likely a person
is healthy although both tests came back positive (the residual risk of the
screening), then declare two CPT entries as tunable parameters.
"""

from pathlib import Path

from bntune import infer, parse_network, parse_param_spec

FILES = Path(__file__).parent / "files"


def main() -> None:
    net = parse_network((FILES / "diagnostic.net").read_text())
    print(f"variables: {', '.join(v.name for v in net.variables)}")

    hypothesis = (("COVID-19", "no"),)
    evidence = (("Antigen", "pos"), ("PCR", "pos"))
    risk = infer(net, hypothesis, evidence)
    print(f"P(COVID-19=no | Antigen=pos, PCR=pos) = {risk:.6f}")
    print("A requirement of <= 0.009 is violated at the original values.\n")

    pbn = parse_param_spec((FILES / "diagnostic.params").read_text(), net)
    print(f"tunable parameters: {', '.join(pbn.parameter_names)}")
    for name in pbn.parameter_names:
        low, high = pbn.interval(name)
        origin = pbn.origin_instantiation()[name]
        print(f"  {name}: original {float(origin)}, allowed [{float(low)}, {float(high)}]")

    # Parametrized rows stay distributions symbolically: the row's other
    # entries scale by (1 - x) / (1 - original pivot).
    row = pbn.cpt_map["Antigen"].row(("yes", "yes"))
    print("parametrized antigen row:", ", ".join(str(entry) for entry in row))


if __name__ == "__main__":
    main()
