#include <doctest.h>

#include "tellipsoid/expression_data.hpp"
#include "tellipsoid/simulation.hpp"
#include "tellipsoid/tstats.hpp"

#include <sstream>
#include <string>
#include <vector>

using namespace tellipsoid;

namespace {

ExpressionMatrix parse(const std::string& tsv, bool apply_log10 = false) {
    std::istringstream in(tsv);
    return read_expression_matrix(in, "test", apply_log10);
}

GroupLabels parse_labels(const std::string& tsv, const std::vector<std::string>& sample_ids) {
    std::istringstream in(tsv);
    return read_labels(in, "test", sample_ids);
}

const std::string k3x4 =
    "gene_id\ts1\ts2\ts3\ts4\n"
    "gA\t1.5\t2.5\t3.5\t4.5\n"
    "gB\t-1\t0\t1\t2\n"
    "gC\t0.25\t0.5\t0.75\t1\n";

} // namespace

TEST_CASE("well-formed 3x4 TSV parses with ids and values intact") {
    const ExpressionMatrix x = parse(k3x4);
    CHECK(x.genes() == 3);
    CHECK(x.samples() == 4);
    CHECK(x.gene_ids == std::vector<std::string>{"gA", "gB", "gC"});
    CHECK(x.sample_ids == std::vector<std::string>{"s1", "s2", "s3", "s4"});
    CHECK(x.values(0, 0) == 1.5);
    CHECK(x.values(1, 0) == -1.0);
    CHECK(x.values(2, 3) == 1.0);
}

TEST_CASE("matrices below the analysis floor parse but fail validate()") {
    const ExpressionMatrix x = parse(k3x4);
    CHECK_THROWS_WITH_AS(validate(x), doctest::Contains("at least 4 genes"), ValidationError);

    const ExpressionMatrix wide = parse(
        "gene_id\ts1\ts2\ts3\ts4\n"
        "g1\t1\t2\t3\t4\n"
        "g2\t4\t3\t2\t1\n"
        "g3\t1\t1\t2\t2\n"
        "g4\t2\t2\t1\t1\n");
    CHECK_NOTHROW(validate(wide));
}

TEST_CASE("NA entry is a parse error naming line and column") {
    const std::string bad =
        "gene_id\ts1\ts2\ts3\ts4\n"
        "gA\t1\t2\t3\t4\n"
        "gB\t1\tNA\t3\t4\n";
    CHECK_THROWS_WITH_AS(parse(bad), doctest::Contains("line 3, column 3"), ValidationError);
    CHECK_THROWS_WITH_AS(parse(bad), doctest::Contains("NA"), ValidationError);
}

TEST_CASE("wrong column count is rejected with the offending line") {
    const std::string bad =
        "gene_id\ts1\ts2\n"
        "gA\t1\t2\n"
        "gB\t1\n";
    CHECK_THROWS_WITH_AS(parse(bad), doctest::Contains("line 3"), ValidationError);
}

TEST_CASE("duplicate identifiers are rejected") {
    CHECK_THROWS_WITH_AS(parse("gene_id\ts1\ts1\n"
                               "gA\t1\t2\n"),
                         doctest::Contains("duplicate sample ID 's1'"), ValidationError);
    CHECK_THROWS_WITH_AS(parse("gene_id\ts1\ts2\n"
                               "gA\t1\t2\n"
                               "gA\t3\t4\n"),
                         doctest::Contains("duplicate gene ID 'gA'"), ValidationError);
}

TEST_CASE("empty and header-only inputs are rejected") {
    CHECK_THROWS_AS(parse(""), ValidationError);
    CHECK_THROWS_WITH_AS(parse("gene_id\ts1\ts2\n"), doctest::Contains("no gene rows"),
                         ValidationError);
}

TEST_CASE("log10 option maps powers of ten to integers") {
    const ExpressionMatrix x = parse(
        "gene_id\ts1\ts2\ts3\n"
        "gA\t1\t10\t100\n",
        true);
    CHECK(x.values(0, 0) == 0.0);
    CHECK(x.values(0, 1) == 1.0);
    CHECK(x.values(0, 2) == 2.0);
}

TEST_CASE("log10 option rejects non-positive entries naming the cell") {
    const std::string zero_entry =
        "gene_id\ts1\ts2\n"
        "gA\t1\t10\n"
        "gB\t0\t5\n";
    CHECK_THROWS_WITH_AS(parse(zero_entry, true), doctest::Contains("gene 'gB'"),
                         ValidationError);
    const std::string negative_entry =
        "gene_id\ts1\ts2\n"
        "gA\t1\t-3\n";
    CHECK_THROWS_AS(parse(negative_entry, true), ValidationError);
}

TEST_CASE("infinite values are rejected even though from_chars accepts them") {
    const std::string bad =
        "gene_id\ts1\ts2\n"
        "gA\tinf\t2\n";
    CHECK_THROWS_WITH_AS(parse(bad), doctest::Contains("non-finite"), ValidationError);
}

TEST_CASE("write/read round trip is bit identical on awkward doubles") {
    ExpressionMatrix x;
    x.gene_ids = {"g1", "g2", "g3", "g4", "g5", "g6"};
    x.sample_ids = {"a", "b", "c", "d", "e"};
    x.values.resize(6, 5);
    Rng rng(20240817u);
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 5; ++j)
            x.values(i, j) = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
    x.values(2, 2) = 0.1;              // not exactly representable
    x.values(3, 1) = 1.0 / 3.0;        // repeating binary fraction
    x.values(4, 4) = -4.9406564584124654e-324; // smallest subnormal, negated

    std::ostringstream out;
    write_expression_matrix(x, out);
    const ExpressionMatrix y = parse(out.str());

    REQUIRE(y.genes() == x.genes());
    REQUIRE(y.samples() == x.samples());
    CHECK(y.gene_ids == x.gene_ids);
    CHECK(y.sample_ids == x.sample_ids);
    for (Eigen::Index i = 0; i < x.genes(); ++i)
        for (Eigen::Index j = 0; j < x.samples(); ++j)
            CHECK(y.values(i, j) == x.values(i, j));
}

TEST_CASE("CRLF line endings parse identically to LF") {
    std::string crlf = k3x4;
    std::string with_cr;
    for (char ch : crlf) {
        if (ch == '\n') with_cr += "\r\n";
        else with_cr += ch;
    }
    const ExpressionMatrix a = parse(k3x4);
    const ExpressionMatrix b = parse(with_cr);
    CHECK(a.gene_ids == b.gene_ids);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("labels: 102 samples split 50/52") {
    std::vector<std::string> ids;
    std::string tsv = "sample_id\tgroup\n";
    for (int j = 0; j < 102; ++j) {
        ids.push_back("s" + std::to_string(j + 1));
        tsv += ids.back() + "\t" + (j < 50 ? "1" : "2") + "\n";
    }
    const GroupLabels labels = parse_labels(tsv, ids);
    CHECK(labels.n1 == 50);
    CHECK(labels.n2 == 52);
    CHECK(labels.assignment[0] == 1);
    CHECK(labels.assignment[101] == 2);
}

TEST_CASE("labels: 2/2 split is the minimum legal design; 3/1 is rejected") {
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    const GroupLabels ok = parse_labels("a\t1\nb\t1\nc\t2\nd\t2\n", ids);
    CHECK(ok.n1 == 2);
    CHECK(ok.n2 == 2);
    CHECK_THROWS_WITH_AS(parse_labels("a\t1\nb\t1\nc\t1\nd\t2\n", ids),
                         doctest::Contains("at least 2"), ValidationError);
}

TEST_CASE("labels: unknown, missing, duplicate, and malformed rows are rejected") {
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    CHECK_THROWS_WITH_AS(parse_labels("a\t1\nb\t1\nzz\t2\nd\t2\n", ids),
                         doctest::Contains("unknown sample ID 'zz'"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_labels("a\t1\nb\t1\nc\t2\n", ids),
                         doctest::Contains("'d' has no label"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_labels("a\t1\na\t2\nb\t1\nc\t2\nd\t2\n", ids),
                         doctest::Contains("labeled twice"), ValidationError);
    CHECK_THROWS_WITH_AS(parse_labels("a\t1\nb\t1\nc\t2\nd\t3\n", ids),
                         doctest::Contains("group must be 1 or 2"), ValidationError);
}

TEST_CASE("labels: comments and header line are tolerated, order is arbitrary") {
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    const GroupLabels labels = parse_labels(
        "# produced by hand\n"
        "sample_id\tgroup\n"
        "d\t2\n"
        "a\t1\n"
        "c\t2\n"
        "b\t1\n",
        ids);
    CHECK(labels.assignment == std::vector<int>{1, 1, 2, 2});
}

TEST_CASE("permuting samples together with their labels leaves t-statistics unchanged") {
    // Half-integer entries make every group sum (and hence every mean) exact,
    // so the means are bitwise invariant. The variance accumulates squared
    // deviations in column order, which the permutation reorders, so t is
    // only pinned up to that final rounding.
    ExpressionMatrix x;
    x.sample_ids = {"s1", "s2", "s3", "s4", "s5", "s6"};
    x.values.resize(5, 6);
    Rng rng(99u);
    for (Eigen::Index i = 0; i < 5; ++i) {
        x.gene_ids.push_back("g" + std::to_string(i));
        for (Eigen::Index j = 0; j < 6; ++j)
            x.values(i, j) = static_cast<double>(rng.below(17)) - 8.0;
    }
    // Guard against an accidental zero-variance row.
    x.values(0, 0) += 0.5;
    x.values(1, 3) += 0.5;
    GroupLabels labels;
    labels.assignment = {1, 2, 1, 2, 1, 2};
    labels.n1 = 3;
    labels.n2 = 3;

    const std::vector<Eigen::Index> perm{4, 2, 0, 5, 1, 3};
    ExpressionMatrix px = x;
    GroupLabels plabels = labels;
    for (std::size_t j = 0; j < perm.size(); ++j) {
        const Eigen::Index src = perm[j];
        px.values.col(static_cast<Eigen::Index>(j)) = x.values.col(src);
        px.sample_ids[j] = x.sample_ids[static_cast<std::size_t>(src)];
        plabels.assignment[j] = labels.assignment[static_cast<std::size_t>(src)];
    }

    const TStatistics a = two_sample_t(x, labels);
    const TStatistics b = two_sample_t(px, plabels);
    REQUIRE(a.genes() == b.genes());
    for (Eigen::Index i = 0; i < a.genes(); ++i) {
        CHECK(a.group_means(i, 0) == b.group_means(i, 0));
        CHECK(a.group_means(i, 1) == b.group_means(i, 1));
        CHECK(a.t[i] == doctest::Approx(b.t[i]).epsilon(1e-15));
    }
}

TEST_CASE("write_labels emits a file read_labels accepts unchanged") {
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    GroupLabels labels;
    labels.assignment = {2, 1, 2, 1};
    labels.n1 = 2;
    labels.n2 = 2;
    std::ostringstream expected;
    expected << "sample_id\tgroup\na\t2\nb\t1\nc\t2\nd\t1\n";
    // write_labels goes to a path; exercise through a temp file in the CLI
    // tests. Here check the parse of the exact emitted format.
    const GroupLabels back = parse_labels(expected.str(), ids);
    CHECK(back.assignment == labels.assignment);
    CHECK(back.n1 == 2);
    CHECK(back.n2 == 2);
}
