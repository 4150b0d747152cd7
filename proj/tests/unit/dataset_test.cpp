#include <cmath>

#include <gtest/gtest.h>

#include "icumort/dataset.hpp"
#include "icumort/error.hpp"

using namespace icumort;

TEST(Csv, ParsesMissingCellsAndLabels) {
    const auto ds = parse_csv("stay_id,hr,lactate,label\n1,80,,0\n2,,2.5,1\n3,95,NA,0\n");
    ASSERT_EQ(ds.n_rows(), 3u);
    EXPECT_EQ(ds.column(0).kind, ColumnKind::identifier);
    EXPECT_EQ(ds.feature_names(), (std::vector<std::string>{"hr", "lactate"}));
    EXPECT_TRUE(is_missing(ds.at(0, 2)));
    EXPECT_TRUE(is_missing(ds.at(2, 2)));
    EXPECT_EQ(ds.column(1).missing_count, 1u);
    EXPECT_EQ(ds.column(2).missing_count, 2u);
    EXPECT_EQ(std::vector<int>(ds.labels().begin(), ds.labels().end()), (std::vector<int>{0, 1, 0}));
}

TEST(Csv, RoundTripIsExact) {
    CsvReadOptions opts;
    opts.group_column = "day";
    const auto ds = parse_csv("a,b,label,day\n0.1,1e-300,1,2\n,3.141592653589793,0,1\n", opts);
    const auto again = parse_csv(format_csv(ds), opts);
    EXPECT_TRUE(ds == again);
    EXPECT_EQ(format_csv(ds), format_csv(again));
}

TEST(Csv, EmptyLabelColumnGivesUnlabeledDataset) {
    const auto ds = parse_csv("a,label\n1,\n2,\n");
    EXPECT_FALSE(ds.has_labels());
    EXPECT_THROW(ds.labels(), DataError);
}

TEST(Csv, RejectsBadLabels) {
    EXPECT_THROW(parse_csv("a,label\n1,2\n"), DataError);
    EXPECT_THROW(parse_csv("a,label\n1,\n2,1\n"), DataError);
    EXPECT_THROW(parse_csv("a,b\n1,2,3\n"), DataError);
}

TEST(Csv, MissingGroupColumnIsAnError) {
    CsvReadOptions opts;
    opts.group_column = "day";
    EXPECT_THROW(parse_csv("a,label\n1,0\n", opts), DataError);
}

TEST(Dataset, SelectColumnsKeepsRequestedOrder) {
    const auto ds = parse_csv("a,b,c,label\n1,2,3,0\n4,5,6,1\n");
    const std::vector<std::string> names{"c", "a"};
    const auto sub = select_columns(ds, names);
    EXPECT_EQ(sub.column_names(), names);
    EXPECT_EQ(sub.at(1, 0), 6.0);
    EXPECT_EQ(sub.at(1, 1), 4.0);
    const std::vector<std::string> bad{"zzz"};
    EXPECT_THROW(select_columns(ds, bad), DataError);
}

TEST(Dataset, FeatureMatrixSkipsIdentifiers) {
    CsvReadOptions opts;
    opts.identifier_columns = {"is_synthetic"};
    const auto ds = parse_csv("stay_id,x,is_synthetic,label\n7,1.5,0,0\n8,2.5,1,1\n", opts);
    const auto m = feature_matrix(ds);
    ASSERT_EQ(m.cols(), 1u);
    EXPECT_EQ(m(1, 0), 2.5);
}

TEST(Dataset, ConcatRequiresMatchingSchema) {
    const auto a = parse_csv("x,label\n1,0\n");
    const auto b = parse_csv("y,label\n1,0\n");
    EXPECT_THROW(a.concat_rows(b), DataError);
    EXPECT_EQ(a.concat_rows(a).n_rows(), 2u);
}

TEST(Dataset, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1e300}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}
