#include <gtest/gtest.h>

#include <mfnav/grid.hpp>

using namespace mfnav;

TEST(Cell, ArithmeticAndOrdering) {
  EXPECT_EQ((Cell{2, 3} + Cell{1, -1}), (Cell{3, 2}));
  EXPECT_EQ((Cell{2, 3} - Cell{2, 3}), (Cell{0, 0}));
  EXPECT_LT((Cell{1, 9}), (Cell{2, 0}));
  EXPECT_LT((Cell{1, 0}), (Cell{1, 1}));
}

TEST(Cell, Distances) {
  EXPECT_EQ(chebyshev({0, 0}, {3, -5}), 5);
  EXPECT_EQ(manhattan({0, 0}, {3, -5}), 8);
  EXPECT_DOUBLE_EQ(euclidean({0, 0}, {3, 4}), 5.0);
}

TEST(Heading, TurnsAreInverse) {
  for (int h = 0; h < 4; ++h) {
    const Heading x = Heading(h);
    EXPECT_EQ(turned_left(turned_right(x)), x);
    EXPECT_EQ(turned_right(turned_left(x)), x);
    EXPECT_EQ(turned_left(turned_left(turned_left(turned_left(x)))), x);
  }
  EXPECT_EQ(turned_right(Heading::North), Heading::East);
  EXPECT_EQ(turned_left(Heading::North), Heading::West);
}

TEST(Heading, OffsetsRoundTrip) {
  EXPECT_EQ(offset(Heading::North), (Cell{0, -1}));
  EXPECT_EQ(offset(Heading::East), (Cell{1, 0}));
  for (int h = 0; h < 4; ++h) EXPECT_EQ(heading_of(offset(Heading(h))), Heading(h));
  EXPECT_FALSE(heading_of({1, 1}).has_value());
  EXPECT_FALSE(heading_of({0, 0}).has_value());
}

TEST(Heading, NamesParse) {
  for (int h = 0; h < 4; ++h) EXPECT_EQ(parse_heading(heading_name(Heading(h))), Heading(h));
  EXPECT_THROW(parse_heading("NE"), std::invalid_argument);
}

TEST(Rect, EmptyAndExpand) {
  Rect r;
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.width(), 0);
  r.expand_to({3, 4});
  EXPECT_EQ(r.width(), 1);
  r.expand_to({1, 7});
  EXPECT_EQ((std::array{r.x0, r.y0, r.x1, r.y1}), (std::array{1, 4, 3, 7}));
  EXPECT_TRUE(r.contains({2, 5}));
  EXPECT_FALSE(r.contains({0, 5}));
  const Rect c = r.inflated(5).clipped(6, 10);
  EXPECT_EQ((std::array{c.x0, c.y0, c.x1, c.y1}), (std::array{0, 0, 5, 9}));
  EXPECT_TRUE(Rect{}.inflated(3).empty());
}

TEST(Grid, IndexingAndBounds) {
  Grid<int> g(4, 3, 7);
  EXPECT_EQ(g.size(), 12u);
  g[{3, 2}] = 1;
  EXPECT_EQ(g.data().back(), 1);
  EXPECT_EQ(g.cell_of(g.index({2, 1})), (Cell{2, 1}));
  EXPECT_THROW(g.at({4, 0}), std::out_of_range);
  EXPECT_THROW(g.at({0, -1}), std::out_of_range);
  EXPECT_THROW(Grid<int>(-1, 2), std::invalid_argument);
}
