#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace vizrec;
using testing_support::count_on;
using testing_support::enc;

namespace {

const Dataset& movies() { return *testing_support::dataset("movies"); }

// Uniform random valid spec over `ds`, drawn by rejection.
VisSpec random_valid_spec(std::mt19937_64& rng, const Dataset& ds) {
    static const std::vector<Transformation> transforms{
        Transformation::raw(),   Transformation::bin(),  Transformation::aggregate(AggregateOp::Mean),
        Transformation::aggregate(AggregateOp::Sum), Transformation::sort(SortOrder::Ascending),
        Transformation::sort(SortOrder::Descending)};
    auto pick = [&rng](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    for (;;) {
        VisSpec s;
        s.mark = kAllMarks[pick(kAllMarks.size())];
        std::size_t n = 1 + pick(3);
        std::vector<Channel> channels(kAllChannels.begin(), kAllChannels.end());
        std::shuffle(channels.begin(), channels.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            if (pick(4) == 0) {
                s.encodings.push_back(count_on(channels[i]));
            } else {
                s.encodings.push_back(enc(channels[i], ds.fields()[pick(ds.field_count())].name, transforms[pick(transforms.size())]));
            }
        }
        if (is_valid(s, ds)) return s;
    }
}

} // namespace

TEST(VariableSet, CountIsNotAnAttribute) {
    VisSpec s{Mark::Bar, {enc(Channel::X, "Creative Type"), count_on(Channel::Y)}};
    EXPECT_EQ(variable_set(s), (std::set<std::string>{"Creative Type"}));
}

TEST(VariableSet, ScatterWithColor) {
    VisSpec s{Mark::Point, {enc(Channel::X, "US Gross"), enc(Channel::Y, "Production Budget"), enc(Channel::Color, "Major Genre")}};
    EXPECT_EQ(variable_set(s), (std::set<std::string>{"US Gross", "Production Budget", "Major Genre"}));
}

TEST(VariableSet, MarkIsNotAnAttribute) {
    VisSpec a{Mark::Point, {enc(Channel::X, "US Gross")}};
    VisSpec b{Mark::Tick, {enc(Channel::X, "US Gross")}};
    EXPECT_EQ(variable_set(a), variable_set(b));
}

TEST(Canonicalize, OrderInsensitive) {
    VisSpec a{Mark::Point, {enc(Channel::Y, "b"), enc(Channel::X, "a")}};
    VisSpec b{Mark::Point, {enc(Channel::X, "a"), enc(Channel::Y, "b")}};
    EXPECT_EQ(canonicalize(a), canonicalize(b));
    EXPECT_EQ(canonicalize(a).spec, b);
    EXPECT_TRUE(same_design(a, b));
}

TEST(Canonicalize, TransformAndMarkAreDistinguishing) {
    VisSpec raw{Mark::Bar, {enc(Channel::X, "a")}};
    VisSpec bin{Mark::Bar, {enc(Channel::X, "a", Transformation::bin())}};
    VisSpec point{Mark::Point, {enc(Channel::X, "a")}};
    EXPECT_NE(canonical_key(raw), canonical_key(bin));
    EXPECT_NE(canonical_key(raw), canonical_key(point));
}

TEST(Canonicalize, Idempotent) {
    VisSpec s{Mark::Line, {enc(Channel::Color, "z"), enc(Channel::Y, "y"), enc(Channel::X, "x")}};
    auto once = canonicalize(s);
    EXPECT_EQ(canonicalize(once.spec).key, once.key);
}

TEST(Canonicalize, KeyEscapesSeparators) {
    VisSpec a{Mark::Point, {enc(Channel::X, "a,Y=b[raw]")}};
    VisSpec b{Mark::Point, {enc(Channel::X, "a"), enc(Channel::Y, "b")}};
    EXPECT_NE(canonical_key(a), canonical_key(b));
}

TEST(Validate, RejectsStructuralErrors) {
    const auto& ds = movies();
    EXPECT_THROW(validate({Mark::Point, {enc(Channel::X, "Major Genre", Transformation::bin())}}, ds), InvalidSpec);
    EXPECT_THROW(validate({Mark::Point, {enc(Channel::X, "Major Genre", Transformation::aggregate(AggregateOp::Mean))}}, ds),
                 InvalidSpec);
    EXPECT_THROW(validate({Mark::Point, {enc(Channel::X, "US Gross"), enc(Channel::Y, "US Gross")}}, ds), InvalidSpec);
    EXPECT_THROW(validate({Mark::Point, {enc(Channel::X, "US Gross"), enc(Channel::X, "IMDB Rating")}}, ds), InvalidSpec);
    EXPECT_THROW(validate({Mark::Point, {enc(Channel::X, "nope")}}, ds), InvalidSpec);
    EXPECT_THROW(validate({Mark::Point, {enc(Channel::X, "US Gross"), enc(Channel::Shape, "IMDB Rating")}}, ds), InvalidSpec);
    EXPECT_THROW(validate({Mark::Point, {enc(Channel::Y, "US Gross")}}, ds), InvalidSpec);
    EXPECT_THROW(validate({Mark::Point,
                           {enc(Channel::X, "US Gross"), enc(Channel::Y, "IMDB Rating"), enc(Channel::Color, "Major Genre"),
                            enc(Channel::Size, "IMDB Votes")}},
                          ds),
                 InvalidSpec);
    EXPECT_NO_THROW(validate({Mark::Bar, {enc(Channel::X, "Creative Type"), count_on(Channel::Y)}}, ds));
}

TEST(Serialize, CountBar) {
    const auto& ds = movies();
    VisSpec s{Mark::Bar, {enc(Channel::X, "Creative Type"), count_on(Channel::Y)}};
    auto doc = serialize(s, "movies", &ds);
    EXPECT_EQ(doc["$schema"], std::string(kVegaLiteSchema));
    EXPECT_EQ(doc["mark"], "bar");
    EXPECT_EQ(doc["encoding"]["x"]["field"], "Creative Type");
    EXPECT_EQ(doc["encoding"]["x"]["type"], "nominal");
    EXPECT_EQ(doc["encoding"]["y"]["aggregate"], "count");
    EXPECT_EQ(doc["encoding"]["y"]["type"], "quantitative");
    EXPECT_FALSE(doc["encoding"]["y"].contains("field"));
    EXPECT_EQ(doc["data"]["name"], "movies");
}

TEST(Serialize, Scatterplot) {
    const auto& ds = movies();
    VisSpec s{Mark::Point, {enc(Channel::X, "US Gross"), enc(Channel::Y, "Production Budget")}};
    auto doc = serialize(s, "movies", &ds);
    EXPECT_EQ(doc["mark"], "point");
    EXPECT_EQ(doc["encoding"]["x"]["type"], "quantitative");
    EXPECT_EQ(doc["encoding"]["y"]["field"], "Production Budget");
    EXPECT_FALSE(doc["encoding"]["x"].contains("bin"));
}

TEST(Serialize, DeterministicBytes) {
    VisSpec a{Mark::Point, {enc(Channel::Y, "b"), enc(Channel::X, "a")}};
    VisSpec b{Mark::Point, {enc(Channel::X, "a"), enc(Channel::Y, "b")}};
    EXPECT_EQ(serialize_string(a, "d"), serialize_string(b, "d"));
}

TEST(Serialize, RoundTripRandomSpecs) {
    const auto& ds = movies();
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        auto s = random_valid_spec(rng, ds);
        auto text = serialize_string(s, "movies", &ds);
        auto back = parse_chart(text);
        ASSERT_EQ(back, canonicalize(s).spec) << text;
        ASSERT_EQ(canonical_key(back), canonical_key(s));
    }
}

TEST(ParseChart, Errors) {
    EXPECT_THROW(parse_chart(std::string_view("{")), ParseError);
    EXPECT_THROW(parse_chart(std::string_view(R"({"mark":"pie","encoding":{}})")), ParseError);
    EXPECT_THROW(parse_chart(std::string_view(R"({"mark":"bar","encoding":{"theta":{"field":"a"}}})")), UnsupportedChannel);
    EXPECT_THROW(parse_chart(std::string_view(R"({"mark":"bar","encoding":{"x":{"type":"nominal"}}})")), ParseError);
    EXPECT_THROW(parse_chart(std::string_view(R"({"encoding":{}})")), ParseError);
}

TEST(ParseChart, AcceptsMarkObject) {
    auto s = parse_chart(std::string_view(R"({"mark":{"type":"tick"},"encoding":{"x":{"field":"a","type":"quantitative"}}})"));
    EXPECT_EQ(s.mark, Mark::Tick);
    ASSERT_EQ(s.encodings.size(), 1u);
    EXPECT_EQ(s.encodings[0].field, "a");
}

TEST(Transformation, StringRoundTrip) {
    for (auto t : {Transformation::raw(), Transformation::bin(), Transformation::count(),
                   Transformation::aggregate(AggregateOp::Mean), Transformation::aggregate(AggregateOp::Sum),
                   Transformation::sort(SortOrder::Ascending), Transformation::sort(SortOrder::Descending)}) {
        auto back = transformation_from_string(to_string(t));
        ASSERT_TRUE(back);
        EXPECT_EQ(*back, t);
    }
    EXPECT_FALSE(transformation_from_string("median"));
}
