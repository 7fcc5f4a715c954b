// Copyright 2026 The cdhwr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "cdhwr/data.hpp"

using namespace cdhwr;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("cdhwr_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  out << s;
}

void touch_image(const fs::path& root, const std::string& id) {
  const fs::path p = iam_image_path(root, id);
  fs::create_directories(p.parent_path());
  write_png(p.string(), GrayImage(4, 6, 200));
}

}  // namespace

TEST(IamLine, ParsesExample) {
  std::string err;
  const auto s = parse_iam_line("a01-000u-00-00 ok 154 408 768 27 51 AT A", err);
  ASSERT_TRUE(s) << err;
  EXPECT_EQ(s->id, "a01-000u-00-00");
  EXPECT_TRUE(s->fields.ok);
  EXPECT_EQ(s->fields.graylevel, 154);
  EXPECT_EQ(s->fields.x, 408);
  EXPECT_EQ(s->fields.y, 768);
  EXPECT_EQ(s->fields.w, 27);
  EXPECT_EQ(s->fields.h, 51);
  EXPECT_EQ(s->fields.tag, "AT");
  EXPECT_EQ(s->transcription, "A");
}

TEST(IamLine, ErrAndMalformed) {
  std::string err;
  const auto e = parse_iam_line("a01-000u-00-01 err 154 507 766 213 48 NN MOVE", err);
  ASSERT_TRUE(e);
  EXPECT_FALSE(e->fields.ok);
  EXPECT_FALSE(parse_iam_line("a01-000u-00-01 ok 154 507", err));
  EXPECT_NE(err.find("9 fields"), std::string::npos);
  EXPECT_FALSE(parse_iam_line("a01-000u-00-01 maybe 154 507 766 213 48 NN MOVE", err));
  EXPECT_FALSE(parse_iam_line("a01-000u-00-01 ok 154 5x7 766 213 48 NN MOVE", err));
  EXPECT_FALSE(parse_iam_line("a01 ok 154 507 766 213 48 NN MOVE", err));
}

TEST(IamLine, FormatRoundTrip) {
  for (const std::string line : {"a01-000u-00-00 ok 154 408 768 27 51 AT A",
                                 "r06-143-04-09 err 170 1772 1466 53 22 , ,",
                                 "b04-020-02-05 ok 182 -1 -1 -1 -1 NN ( ab )"}) {
    std::string err;
    const auto s = parse_iam_line(line, err);
    ASSERT_TRUE(s) << err;
    EXPECT_EQ(format_iam_line(*s), line);
  }
}

TEST(IamLine, ImagePathHierarchy) {
  EXPECT_EQ(iam_image_path("/w", "a01-000u-00-00"), fs::path("/w/a01/a01-000u/a01-000u-00-00.png"));
}

TEST(LoadIam, FiltersAndCounts) {
  const fs::path d = fresh_dir("load_iam");
  write_text(d / "words.txt",
             "# comment\n"
             "a01-000u-00-00 ok 154 408 768 27 51 AT A\n"
             "a01-000u-00-01 err 154 507 766 213 48 NN MOVE\n"
             "a01-000u-00-02 ok 154 796 764 70 50 TO to\n"
             "a01-000u-00-03 ok 154 919 757 166 78 VB stop\n"
             "a01-000u-00-04 ok 154 919 757 166 78 NN aaaaaaaaaaaaaaaaa\n");
  for (const char* id : {"a01-000u-00-00", "a01-000u-00-01", "a01-000u-00-02", "a01-000u-00-04"}) {
    touch_image(d / "words", id);
  }
  std::ostringstream log;
  LoadOptions opt;
  opt.log = &log;
  const LoadResult r = load_iam((d / "words.txt").string(), (d / "words").string(), opt);
  ASSERT_EQ(r.samples.size(), 2u);
  EXPECT_EQ(r.samples[0].transcription, "A");
  EXPECT_EQ(r.samples[1].transcription, "to");
  EXPECT_EQ(r.comments, 1u);
  EXPECT_EQ(r.err_filtered, 1u);
  EXPECT_EQ(r.missing_images, 1u);
  EXPECT_EQ(r.infeasible, 1u);
  EXPECT_NE(log.str().find("a01-000u-00-03.png"), std::string::npos);

  opt.include_err = true;
  EXPECT_EQ(load_iam((d / "words.txt").string(), (d / "words").string(), opt).samples.size(), 3u);
}

TEST(LoadIam, MalformedLineNamesLineNumber) {
  const fs::path d = fresh_dir("load_bad");
  write_text(d / "words.txt", "# c\na01-000u-00-00 ok 154 408 768 27 51 AT A\na01-000u-00-01 ok 1\n");
  try {
    load_iam((d / "words.txt").string(), (d / "words").string());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("words.txt:3:"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_iam((d / "nope.txt").string(), d.string()), DataError);
}

TEST(Feasibility, PaddedFrames) {
  EXPECT_EQ(padded_frames(U"a"), 3u);
  EXPECT_EQ(padded_frames(U"ab"), 5u);
  EXPECT_EQ(padded_frames(U"aa"), 6u);
  EXPECT_TRUE(transcription_fits("abcdefghijklmno"));  // 31 frames
  EXPECT_TRUE(transcription_fits("abcdefghijklmno", 31));
  EXPECT_FALSE(transcription_fits("abcdefghijklmnop"));  // 33 frames
  EXPECT_FALSE(transcription_fits(""));
}

TEST(Vocab, BuildSortedWithBlankLast) {
  std::vector<Sample> s(2);
  s[0].transcription = "ab";
  s[1].transcription = "ba";
  const CharVocab v = build_vocab(s);
  EXPECT_EQ(v.utf8(), "ab");
  EXPECT_EQ(v.blank(), 2);
  EXPECT_EQ(v.num_classes(), 3u);
  EXPECT_THROW(build_vocab({}), DataError);
}

TEST(Vocab, RejectsTooManyCharacters) {
  std::vector<Sample> s(1);
  for (char32_t c = 0x100; c < 0x100 + 80; ++c) utf8_append(s[0].transcription, c);
  EXPECT_THROW(build_vocab(s), DataError);
  s[0].transcription.clear();
  for (char32_t c = 0x100; c < 0x100 + 79; ++c) utf8_append(s[0].transcription, c);
  EXPECT_EQ(build_vocab(s).size(), 79u);
}

TEST(Vocab, EncodeDecodeIdentity) {
  const CharVocab v = CharVocab::from_utf8("abcé");
  for (const std::string w : {"a", "cab", "éa", "abcé"}) EXPECT_EQ(v.decode(v.encode(w)), w);
  EXPECT_THROW(v.encode("z"), std::invalid_argument);
  EXPECT_THROW(v.decode({v.blank()}), std::out_of_range);
}

TEST(Split, NinetyFiveFive) {
  std::vector<Sample> s(100);
  for (std::size_t i = 0; i < s.size(); ++i) s[i].id = "x-" + std::to_string(i) + "-0";
  const Split a = split_95_5(s, 3), b = split_95_5(s, 3), c = split_95_5(s, 4);
  EXPECT_EQ(a.train.size(), 95u);
  EXPECT_EQ(a.test.size(), 5u);
  std::set<std::string> all;
  for (const auto& x : a.train) all.insert(x.id);
  for (const auto& x : a.test) all.insert(x.id);
  EXPECT_EQ(all.size(), 100u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(a.test[i].id, b.test[i].id);
  bool differs = false;
  for (std::size_t i = 0; i < 5; ++i) differs |= a.test[i].id != c.test[i].id;
  EXPECT_TRUE(differs);

  s.resize(20);
  const Split small = split_95_5(s, 1);
  EXPECT_EQ(small.train.size(), 19u);
  EXPECT_EQ(small.test.size(), 1u);
  s.resize(19);
  EXPECT_THROW(split_95_5(s, 1), DataError);
}

TEST(Toy, DeterministicAndSized) {
  const auto words = default_toy_words();
  ASSERT_EQ(words.size(), 30u);
  const auto a = gen_toy(words, 10, 9);
  const auto b = gen_toy(words, 10, 9);
  ASSERT_EQ(a.size(), 300u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(*a[i].raster, *b[i].raster);
    EXPECT_EQ(a[i].transcription, words[i / 10]);
    EXPECT_TRUE(transcription_fits(a[i].transcription));
  }
  EXPECT_EQ(a[0].id, "toy-w000-00-00");
  EXPECT_NE(*a[0].raster, *a[1].raster);  // jittered renders differ
}

TEST(Toy, NoJitterRenders) {
  Rng rng(1);
  const GrayImage one = render_word("a", ToyJitter::none(), rng);
  const GrayImage two = render_word("ab", ToyJitter::none(), rng);
  EXPECT_EQ(one.height, two.height);
  EXPECT_GT(two.width, one.width);
  EXPECT_EQ(render_word("ab", ToyJitter::none(), rng), two);
  std::size_t ink = 0;
  for (auto p : one.pixels) ink += p == 0;
  EXPECT_GT(ink, 0u);
  EXPECT_THROW(gen_toy({"a~"}, 1, 1), DataError);
  EXPECT_THROW(gen_toy({""}, 1, 1), DataError);
}

TEST(Toy, WrittenDatasetLoadsBack) {
  const fs::path d = fresh_dir("toy_ds");
  const auto samples = gen_toy({"to", "be"}, 2, 5);
  write_toy_dataset(d, samples);
  std::ostringstream log;
  LoadOptions opt;
  opt.log = &log;
  const LoadResult r = load_iam((d / "words.txt").string(), (d / "words").string(), opt);
  ASSERT_EQ(r.samples.size(), 4u);
  EXPECT_EQ(r.comments, 2u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(r.samples[i].id, samples[i].id);
    EXPECT_EQ(r.samples[i].transcription, samples[i].transcription);
    EXPECT_EQ(r.samples[i].image(), *samples[i].raster);
  }
}
