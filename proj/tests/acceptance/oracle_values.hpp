#pragma once
// Generated by tests/oracles/build_oracles.py. Do not edit by hand.

#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

struct KsCase { const char* story; std::vector<std::string> keywords; std::size_t n_story; std::size_t n_keyword; double fraction; };
inline const std::vector<KsCase> kKsCases = {
    {"I walked my dog in the park today", {"park", "dog"}, 33, 9, 0.7272727272727273},
    {"Hi, there!", {"hi"}, 8, 3, 0.625},
    {"a b", {}, 3, 0, 1.0},
    {"We had dinner with friends at the new place downtown.", {"dinner with friends"}, 52, 20, 0.6153846153846154},
    {"It rained all day, so we stayed in and baked bread.", {"rain", "bread"}, 49, 11, 0.7755102040816326},
    {"Grandma's 90th birthday -- cake, candles & songs!", {"grandma", "birthday", "cake"}, 43, 22, 0.4883720930232558},
    {"\xe2""\x80""\x9c""Look!\xe2""\x80""\x9d"" she said \xe2""\x80""\x94"" pointing at the bridge.", {"bridge"}, 37, 7, 0.8108108108108109},
    {"Line one.\nLine two.\nLine three.", {"line"}, 28, 5, 0.8214285714285714},
    {"Windows\r\nstyle\r\nbreaks", {"style"}, 20, 6, 0.7},
    {"Tickets cost $20 + tax; worth it.", {"tickets", "cost"}, 31, 13, 0.5806451612903226},
    {"short", {"a much longer keyword phrase"}, 5, 29, -4.8},
    {"same", {"sam"}, 4, 4, 0.0},
    {"We went to the zoo. The lions slept; the monkeys didn't.", {"zoo", "lions", "monkeys"}, 52, 18, 0.6538461538461539},
    {"Coffee... then more coffee!!!", {"coffee"}, 23, 7, 0.6956521739130435},
    {"Caf\xc3""\xa9"" au lait, s'il vous pla\xc3""\xae""t.", {"caf\xc3""\xa9"""}, 27, 5, 0.8148148148148148},
    {"My sister graduated (finally) from college in May.", {"sister", "graduated", "college"}, 47, 25, 0.46808510638297873},
    {"I   like   spaces", {"spaces"}, 17, 7, 0.5882352941176471},
    {"Tea at 5:30 with Mum and Dad.", {"tea", "mum", "dad"}, 27, 12, 0.5555555555555556},
    {"The hospital visit went well and the nurses were kind to me.", {"hospital", "nurses", "kind"}, 59, 21, 0.6440677966101694},
    {"Ready? Set. Go!", {"go"}, 12, 3, 0.75},
};

struct StoryCount { const char* text; std::size_t expected; };
inline const std::vector<StoryCount> kStoryCounts = {
    {"Hi, there!", 8},
    {"", 0},
    {"a b", 3},
    {"I walked my dog in the park today", 33},
    {"\xe2""\x80""\x9c""Quoted\xe2""\x80""\x9d"" \xe2""\x80""\x94"" dash", 12},
    {"Line\nbreak", 10},
    {"Line\r\nbreak", 10},
    {"$5 + 3 = 8", 10},
};
struct KeywordCount { std::vector<std::string> keywords; std::size_t expected; };
inline const std::vector<KeywordCount> kKeywordCounts = {
    {{"park", "dog"}, 9},
    {{}, 0},
    {{"dinner with friends"}, 20},
    {{"caf\xc3""\xa9""", "a"}, 7},
};

struct SimCase { const char* a; const char* b; double cosine; };
inline const std::vector<SimCase> kSimCases = {
    {"a", "a b", 0.7071067811865475},
    {"dog", "park", 0.4999999999999999},
    {"a b c", "c", 0.5773502691896257},
    {"The dog, in the park!", "sun", 0.5477225575051661},
    {"Dog DOG park", "dog park", 0.981980506061966},
    {"neg", "a", -1.0},
};

struct Stats { double mean, sd, min, q1, median, q3, max; };
struct ModeStats { Stats ks, sim, ratio; };
inline const ModeStats kBench10Kts = {{72.46580086580086, 4.013151857338962, 68.0, 68.99350649350649, 71.42857142857143, 75.0, 80.0}, {0.6663903930255384, 0.09485239158619044, 0.5422275902213466, 0.5920695253259518, 0.6833389210744747, 0.6958819608807824, 0.8625331325219354}, {7.074442595555164, 1.7515259813264907, 5.263157894736842, 5.840311004784689, 6.685527099463966, 7.429123711340206, 10.256410256410255}};
inline const ModeStats kBench10Auto = {{94.61009944266436, 1.755499901274247, 91.11111111111111, 93.86427566807313, 94.85064750921637, 96.08090185676393, 96.5034965034965}, {0.8939086909764532, 0.06556098135897062, 0.7550029587664445, 0.8925735756831702, 0.9144958953794363, 0.9275448563886994, 0.9734660889780838}, {7.074442595555164, 1.7515259813264907, 5.263157894736842, 5.840311004784689, 6.685527099463966, 7.429123711340206, 10.256410256410255}};

} // namespace oracle
