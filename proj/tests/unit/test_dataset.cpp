#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "underreport/csv_io.hpp"
#include "underreport/dataset.hpp"

using namespace underreport;
using testing_support::record;

namespace {

std::string with_header(const std::string& body) {
  return std::string(kDataHeader) + "\n" + body;
}

Ingested parse(const std::string& text) {
  std::istringstream in(text);
  return ingest_csv(in, "test.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Dataset, PellMedianAndCovariates) {
  const auto d = Dataset::from_records({record("a", 2014, 1, 1000, 1, 0.5, 0.2),
                                        record("b", 2014, 2, 1000, 1, 0.5, 0.36),
                                        record("c", 2014, 0, 1000, 1, 0.5, 0.5)});
  EXPECT_DOUBLE_EQ(d.pell_median(), 0.36);
  EXPECT_NEAR(d.covariate(0).pell_centered, -0.16, 1e-12);
  EXPECT_NEAR(d.covariate(1).pell_centered, 0.0, 1e-12);
  EXPECT_NEAR(d.covariate(2).pell_centered, 0.14, 1e-12);
}

TEST(Dataset, DerivedCovariates) {
  const auto d = Dataset::from_records({record("x", 2015, 4, 2500, 3, 0.7, 0.4, true, false)});
  const auto& c = d.covariate(0);
  EXPECT_EQ(c.urban_index, 2);
  EXPECT_DOUBLE_EQ(c.log_students, std::log(2500.0));
  EXPECT_NEAR(c.women_sq, 0.04, 1e-12);
  EXPECT_NEAR(c.women_centered, 0.2, 1e-12);
  EXPECT_EQ(c.assoc, 1.0);
  EXPECT_EQ(c.religious, 0.0);
}

TEST(Dataset, SchoolIndexAndLookup) {
  const auto d = Dataset::from_records({record("b", 2014, 1), record("a", 2014, 1),
                                        record("b", 2015, 2)});
  EXPECT_EQ(d.n_schools(), 2u);
  EXPECT_EQ(d.school_index("b"), 0u);
  EXPECT_EQ(d.covariate(2).school, 0u);
  EXPECT_EQ(d.find_record("b", 2015), 2u);
  EXPECT_FALSE(d.find_record("a", 2015).has_value());
  EXPECT_EQ(d.years(), (std::vector<int>{2014, 2015}));
}

TEST(Dataset, SubsetKeepsGivenMedian) {
  const auto d = Dataset::from_records({record("a", 2014, 1, 100, 1, 0.5, 0.1),
                                        record("a", 2015, 1, 100, 1, 0.5, 0.9),
                                        record("b", 2014, 1, 100, 1, 0.5, 0.3)});
  const std::size_t rows[] = {1};
  const auto s = d.subset(rows, 0.3);
  EXPECT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.pell_median(), 0.3);
  EXPECT_NEAR(s.covariate(0).pell_centered, 0.6, 1e-12);
}

TEST(Dataset, RejectsInvalidRecords) {
  EXPECT_THROW(Dataset::from_records({record("a", 2014, -1)}), DataError);
  EXPECT_THROW(Dataset::from_records({record("a", 2014, 1, 0)}), DataError);
  EXPECT_THROW(Dataset::from_records({record("a", 2014, 1, 10, 4)}), DataError);
  EXPECT_THROW(Dataset::from_records({record("a", 2014, 1, 10, 1, 1.2)}), DataError);
  EXPECT_THROW(Dataset::from_records({record("a", 2014, 1, 10, 1, 0.5, -0.1)}), DataError);
  EXPECT_THROW(Dataset::from_records({record("", 2014, 1)}), DataError);
  EXPECT_THROW(Dataset::from_records({record("a", 2014, 1), record("a", 2014, 2)}), DataError);
}

TEST(Median, EvenAndOdd) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

TEST(Ingest, ThreeRowFixture) {
  const auto got = parse(with_header("a,2014,1,1,1000,0.5,0.2,0,0\n"
                                     "b,2014,2,2,2000,0.6,0.36,1,0\n"
                                     "c,2014,0,3,3000,0.4,0.5,0,true\n"));
  EXPECT_EQ(got.report.records, 3u);
  EXPECT_EQ(got.report.schools, 3u);
  EXPECT_DOUBLE_EQ(got.report.pell_median, 0.36);
  EXPECT_NEAR(got.data.covariate(0).pell_centered, -0.16, 1e-12);
  EXPECT_NEAR(got.data.covariate(2).pell_centered, 0.14, 1e-12);
  EXPECT_TRUE(got.data.record(2).religious);
}

TEST(Ingest, BlankLinesAndCrlf) {
  const auto got = parse(with_header("a,2014,1,1,1000,0.5,0.2,0,0\r\n\r\nb,2014,2,2,2000,0.6,0.36,1,0\n"));
  EXPECT_EQ(got.report.records, 2u);
  EXPECT_EQ(got.report.blank_lines, 1u);
}

TEST(Ingest, Errors) {
  EXPECT_NE(error_of(with_header("")).find("no records"), std::string::npos);
  EXPECT_NE(error_of("").find("no header"), std::string::npos);
  const auto dup = error_of(with_header("a,2014,1,1,1000,0.5,0.2,0,0\na,2014,3,1,1000,0.5,0.2,0,0\n"));
  EXPECT_NE(dup.find("duplicate"), std::string::npos);
  EXPECT_NE(dup.find("(a, 2014)"), std::string::npos);
  EXPECT_NE(dup.find("line 3"), std::string::npos);
  const auto missing = error_of("school_id,year,reported\na,2014,1\n");
  EXPECT_NE(missing.find("missing column 'urbanization'"), std::string::npos);
  const auto bad = error_of(with_header("a,2014,x,1,1000,0.5,0.2,0,0\n"));
  EXPECT_NE(bad.find("line 2"), std::string::npos);
  EXPECT_NE(bad.find("reported"), std::string::npos);
  EXPECT_NE(error_of(with_header("a,2014,1,1,0,0.5,0.2,0,0\n")).find("students"),
            std::string::npos);
  EXPECT_NE(error_of(with_header("a,2014,1,1,10,1.5,0.2,0,0\n")).find("frac_women"),
            std::string::npos);
  EXPECT_NE(error_of(with_header("a,2014,1,1,10,0.5,0.2,0\n")).find("expected 9 columns"),
            std::string::npos);
  EXPECT_NE(error_of(with_header("a,2014,1,1,10,0.5,0.2,2,0\n")).find("assoc_only"),
            std::string::npos);
}

TEST(Ingest, ErrorCarriesRow) {
  try {
    parse(with_header("a,2014,1,1,1000,0.5,0.2,0,0\nb,2014,1,1,1000,0.5,nan?,0,0\n"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
}

TEST(Csv, SplitAndQuote) {
  EXPECT_EQ(split_csv_line("a,\"b,c\",\"d\"\"e\","),
            (std::vector<std::string>{"a", "b,c", "d\"e", ""}));
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(split_csv_line(csv_field("x\"y,z")).front(), "x\"y,z");
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Csv, DatasetRoundTrip) {
  const auto d = Dataset::from_records({record("a,1", 2014, 1, 1000, 1, 0.123456789, 0.2),
                                        record("b", 2015, 2, 20, 2, 0.6, 1.0 / 3.0, true, true)});
  std::ostringstream out;
  write_dataset_csv(out, d);
  EXPECT_EQ(parse(out.str()).data, d);
}

TEST(Csv, DrawsRoundTrip) {
  SampleBatch b;
  b.names = {"alpha0", "delta[0]"};
  b.dim = 2;
  b.n_chains = 2;
  b.draws_per_chain = 3;
  b.draws = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
  std::ostringstream out;
  write_draws_csv(out, b);
  std::istringstream in(out.str());
  const auto back = read_draws_csv(in);
  EXPECT_EQ(back.names, b.names);
  EXPECT_EQ(back.n_chains, 2u);
  EXPECT_EQ(back.draws_per_chain, 3u);
  EXPECT_EQ(back.draws, b.draws);
  std::istringstream bad("x,y\n");
  EXPECT_THROW(read_draws_csv(bad), DataError);
}
