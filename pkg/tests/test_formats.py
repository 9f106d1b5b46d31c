"""Tests for the text formats: network files, parameter files, constraints."""

from __future__ import annotations

from fractions import Fraction

import pytest

from bntune.bn import Constraint, parametrize
from bntune.errors import (
    NotWellFormed,
    ParseError,
    RowSumError,
    UnknownValue,
    UnsupportedMultiEntryRow,
)
from bntune.formats import (
    float17,
    parse_constraint,
    parse_network,
    parse_param_spec,
)
from bntune.poly import as_fraction

from conftest import COVID_NET_TEXT, COVID_PARAMS_TEXT, CP, CQ


# ---------------------------------------------------------------------------
# network files
# ---------------------------------------------------------------------------


def test_parse_network_matches_programmatic_net(covid_net):
    assert parse_network(COVID_NET_TEXT) == covid_net


def test_parse_network_reads_numbers_exactly():
    net = parse_network(COVID_NET_TEXT)
    row = net.cpt_map["Antigen"].row(("yes", "yes"))
    assert row[0].constant_value() == Fraction(72, 100)
    assert row[1].constant_value() == Fraction(28, 100)


def test_parse_network_comments_and_whitespace(covid_net):
    noisy = COVID_NET_TEXT.replace(
        "cpt PCR {", "cpt PCR { # trailing comment\n# full-line comment\n"
    )
    assert parse_network(noisy) == covid_net


def test_parse_network_numeric_value_labels():
    text = """
    var Bit { values: 0, 1; }
    cpt Bit { (): 0.25, 0.75; }
    """
    net = parse_network(text)
    assert net.variable_map["Bit"].values == ("0", "1")


def test_parse_network_row_sum_slightly_off_requires_renormalize():
    text = "var A { values: a, b; } cpt A { (): 0.3333333333, 0.6666666666; }"
    with pytest.raises(RowSumError, match="renormalize"):
        parse_network(text)
    net = parse_network(text, renormalize=True)
    row = net.cpt_map["A"].row(())
    assert sum(p.constant_value() for p in row) == 1
    # Rescaling is exact: the ratio 1:2 of the written numbers is preserved.
    assert row[1].constant_value() == 2 * row[0].constant_value()


def test_parse_network_row_sum_far_off_is_rejected_even_with_renormalize():
    text = "var A { values: a, b; } cpt A { (): 0.5, 0.6; }"
    with pytest.raises(RowSumError):
        parse_network(text, renormalize=True)


def test_parse_network_duplicate_table():
    text = """
    var A { values: a, b; }
    cpt A { (): 0.5, 0.5; }
    cpt A { (): 0.4, 0.6; }
    """
    with pytest.raises(ParseError, match="duplicate table"):
        parse_network(text)


def test_parse_network_missing_table():
    with pytest.raises(NotWellFormed, match="no table"):
        parse_network("var A { values: a, b; }")


def test_parse_network_undeclared_table():
    text = """
    var A { values: a, b; }
    cpt A { (): 0.5, 0.5; }
    cpt B { (): 0.5, 0.5; }
    """
    with pytest.raises(NotWellFormed, match="undeclared"):
        parse_network(text)


def test_parse_network_error_carries_position():
    text = "var A { values: a, b; }\ncpt A ! ():"
    with pytest.raises(ParseError) as excinfo:
        parse_network(text)
    assert excinfo.value.line == 2
    assert excinfo.value.column == 7
    assert "line 2" in str(excinfo.value)


def test_parse_network_rejects_stray_keyword():
    with pytest.raises(ParseError, match="'var' or 'cpt'"):
        parse_network("table A { }")


def test_parse_network_var_without_values():
    with pytest.raises(NotWellFormed, match="no values"):
        parse_network("var A { parents: B; }")


# ---------------------------------------------------------------------------
# parameter files
# ---------------------------------------------------------------------------


def test_parse_param_spec_matches_programmatic(covid_net):
    pbn = parse_param_spec(COVID_PARAMS_TEXT, covid_net)
    assert pbn == parametrize(covid_net, [CP, CQ], {CP: "p", CQ: "q"})
    assert pbn.parameter_names == ("p", "q")


def test_parse_param_spec_interval_clause(covid_net):
    text = """
    param p {
      entry: Antigen(yes, yes): pos;
      interval: 0.5, 0.9;
    }
    """
    pbn = parse_param_spec(text, covid_net)
    assert pbn.interval("p") == (Fraction(1, 2), Fraction(9, 10))


def test_parse_param_spec_default_interval_uses_delta(covid_net):
    text = "param p { entry: Antigen(yes, yes): pos; }"
    pbn = parse_param_spec(text, covid_net, delta=Fraction(1, 100))
    assert pbn.interval("p") == (Fraction(1, 100), Fraction(99, 100))


def test_parse_param_spec_shared_entries(covid_net):
    # Two entries with equal original values may share one parameter name.
    text = """
    param s {
      entry: Symptoms(no): yes;
      entry: Antigen(no, no): pos;
    }
    """
    # Symptoms(no)->yes is 0.1 but Antigen(no,no)->pos is 0.01: unequal pivots.
    with pytest.raises(NotWellFormed):
        parse_param_spec(text, covid_net)
    equal = """
    param s {
      entry: PCR(yes): pos;
      entry: PCR(yes): pos;
    }
    """
    with pytest.raises(UnsupportedMultiEntryRow):
        # Selecting the same entry twice collides on its row.
        parse_param_spec(equal, covid_net)


def test_parse_param_spec_unknown_covariation(covid_net):
    text = """
    param p {
      entry: Antigen(yes, yes): pos;
      covariation: softmax;
    }
    """
    with pytest.raises(ParseError, match="linear-proportional"):
        parse_param_spec(text, covid_net)


def test_parse_param_spec_duplicate_block(covid_net):
    text = """
    param p { entry: Antigen(yes, yes): pos; }
    param p { entry: PCR(yes): pos; }
    """
    with pytest.raises(NotWellFormed, match="duplicate"):
        parse_param_spec(text, covid_net)


def test_parse_param_spec_empty_block(covid_net):
    with pytest.raises(NotWellFormed, match="no entry"):
        parse_param_spec("param p { covariation: linear-proportional; }", covid_net)


def test_parse_param_spec_unknown_variable(covid_net):
    with pytest.raises(UnknownValue, match="Serology"):
        parse_param_spec("param p { entry: Serology(yes): pos; }", covid_net)


def test_parse_param_spec_unknown_value(covid_net):
    with pytest.raises(UnknownValue, match="maybe"):
        parse_param_spec("param p { entry: PCR(yes): maybe; }", covid_net)


def test_parse_param_spec_unknown_clause(covid_net):
    with pytest.raises(ParseError, match="prior"):
        parse_param_spec(
            "param p { entry: PCR(yes): pos; prior: uniform; }", covid_net
        )


# ---------------------------------------------------------------------------
# constraints
# ---------------------------------------------------------------------------


def test_parse_constraint_full_form(covid_net):
    constraint = parse_constraint(
        "P(COVID-19=no | Antigen=pos & PCR=pos) <= 0.009", covid_net
    )
    assert constraint.hypothesis == (("COVID-19", "no"),)
    assert constraint.evidence == (("Antigen", "pos"), ("PCR", "pos"))
    assert constraint.direction == "<="
    assert constraint.threshold == Fraction(9, 1000)


def test_parse_constraint_without_evidence():
    constraint = parse_constraint("P(A=a) >= 0.25")
    assert constraint.hypothesis == (("A", "a"),)
    assert constraint.evidence == ()
    assert constraint.direction == ">="
    assert constraint.threshold == Fraction(1, 4)


def test_parse_constraint_conjunction_in_hypothesis():
    constraint = parse_constraint("P(A=a & B=b | C=c) <= 0.5")
    assert constraint.hypothesis == (("A", "a"), ("B", "b"))
    assert constraint.evidence == (("C", "c"),)


def test_parse_constraint_scientific_threshold():
    assert parse_constraint("P(A=a) <= 1e-3").threshold == Fraction(1, 1000)


def test_parse_constraint_bad_shape():
    for text in (
        "Pr(A=a) <= 0.5",
        "P(A=a) < 0.5",
        "P(A=a) <= ",
        "P(A=a | B=b | C=c) <= 0.5",
        "P(A) <= 0.5",
    ):
        with pytest.raises(ParseError):
            parse_constraint(text)


def test_parse_constraint_bad_threshold_number():
    with pytest.raises(ParseError, match="threshold"):
        parse_constraint("P(A=a) <= 0.5.2")


def test_parse_constraint_threshold_above_one():
    with pytest.raises(NotWellFormed):
        parse_constraint("P(A=a) <= 1.5")


def test_parse_constraint_checks_names_against_net(covid_net):
    with pytest.raises(UnknownValue):
        parse_constraint("P(COVID-19=no | Serology=pos) <= 0.5", covid_net)
    with pytest.raises(UnknownValue):
        parse_constraint("P(COVID-19=maybe) <= 0.5", covid_net)
    # Without a net, names are taken on faith.
    parse_constraint("P(COVID-19=maybe) <= 0.5")


# ---------------------------------------------------------------------------
# float rendering
# ---------------------------------------------------------------------------


def test_float17_round_trips():
    for value in (0.1, 1 / 3, 0.008993168210347551, 2**-52, 123456.789):
        assert float(float17(value)) == value


def test_float17_accepts_fractions():
    assert float(float17(Fraction(1, 3))) == 1 / 3
