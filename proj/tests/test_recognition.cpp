#include "fake_server.hpp"
#include "support.hpp"

#include "imagetalk/digest.hpp"

#include <doctest.h>

#include <set>

using namespace imagetalk;
using namespace testing;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::io;
}

// Backend that returns canned responses, optionally failing for one image.
struct ScriptedBackend : Captioner, Detector {
    json caption_response = json{{"caption", "a dog on the beach"}};
    json detect_response = json{{"objects", json::array()}};
    std::string fail_image;

    json caption(const ImageAsset& image, std::string_view) override {
        if (image.id == fail_image) throw Error(ErrorCode::backend_timeout, "slow");
        return caption_response;
    }
    json detect(const ImageAsset& image, std::string_view, int) override {
        if (image.id == fail_image) throw Error(ErrorCode::backend_timeout, "slow");
        return detect_response;
    }
};

json detection(const std::string& label, double score) {
    return json{{"label", label}, {"score", score}, {"box", {0.1, 0.1, 0.2, 0.2}}};
}

DetectedObject object(std::string image, std::string label, double conf, bool deleted = false) {
    DetectedObject o;
    o.image_id = std::move(image);
    o.label = std::move(label);
    o.confidence = conf;
    o.bbox = {0, 0, 1, 1};
    o.deleted = deleted;
    return o;
}

const ImageAsset kImage{"img1", "x.jpg", "abc.jpg", "abcdef0123456789"};

} // namespace

TEST_CASE("backend configuration") {
    RecognitionBackendConfig c;
    CHECK_NOTHROW(c.validate());
    c.kind = BackendKind::remote;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::invalid_argument);
    c.endpoint_url = "http://localhost:1";
    CHECK_NOTHROW(c.validate());
    c.confidence_floor = 1.5;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::invalid_argument);
    c.confidence_floor = 0.5;
    c.max_objects = 0;
    CHECK(code_of([&] { c.validate(); }) == ErrorCode::invalid_argument);
}

TEST_CASE("mock recognizer") {
    MockRecognizer mock(json{{"abcdef0123456789", {{"caption", "two cats"}, {"objects", {detection("cat", 0.9)}}}}});
    CHECK(caption_image(mock, kImage, "").text == "two cats");
    CHECK(detect_objects(mock, kImage, "", {}).size() == 1);
    ImageAsset other = kImage;
    other.content_hash = "ffffffff00000000";
    CHECK(caption_image(mock, other, "").text == "an image of ffffffff");
    CHECK(detect_objects(mock, other, "", {}).empty());
    CHECK(code_of([] { MockRecognizer(json::array()); }) == ErrorCode::schema);
}

TEST_CASE("caption_image validates the response") {
    ScriptedBackend b;
    const auto c = caption_image(b, kImage, "");
    CHECK(c.image_id == "img1");
    CHECK(c.origin == Origin::machine);
    CHECK(c.id.empty());
    b.caption_response = json{{"caption", "   "}};
    CHECK(code_of([&] { caption_image(b, kImage, ""); }) == ErrorCode::malformed_response);
    b.caption_response = json{{"text", "x"}};
    CHECK(code_of([&] { caption_image(b, kImage, ""); }) == ErrorCode::malformed_response);
}

TEST_CASE("detect_objects validates, sorts and caps") {
    ScriptedBackend b;
    RecognitionBackendConfig cfg;
    cfg.max_objects = 2;
    b.detect_response = json{{"objects", {detection("cup", 0.4), detection("dog", 0.9), detection("bird", 0.9)}}};
    const auto objs = detect_objects(b, kImage, "", cfg);
    REQUIRE(objs.size() == 2);
    CHECK(objs[0].label == "bird");
    CHECK(objs[1].label == "dog");

    for (const json& bad : {detection("dog", 1.2), detection("", 0.5), json{{"label", "x"}, {"score", 0.5}},
                            json{{"label", "x"}, {"score", 0.5}, {"box", {0, 0, 0, 0.2}}}, json("dog")}) {
        b.detect_response = json{{"objects", {bad}}};
        CHECK(code_of([&] { detect_objects(b, kImage, "", cfg); }) == ErrorCode::malformed_response);
    }
    b.detect_response = json::object();
    CHECK(code_of([&] { detect_objects(b, kImage, "", cfg); }) == ErrorCode::malformed_response);
}

TEST_CASE("build_context_corpus") {
    RecognitionBackendConfig cfg;
    std::vector<Caption> caps = {{"", "img2", "second", Origin::machine, false},
                                 {"", "img1", "first", Origin::machine, false}};
    std::vector<DetectedObject> objs = {object("img1", "dog", 0.7), object("img1", "dog", 0.95),
                                        object("img1", "cup", 0.3), object("img2", "dog", 0.8),
                                        object("img1", "bench", 0.5)};
    const Session s = session_with_images(2);
    const auto corpus = build_context_corpus(caps, objs, cfg, s.images);

    SUBCASE("floor, merge, ids and order") {
        REQUIRE(corpus.captions.size() == 2);
        CHECK(corpus.captions[0].text == "first");
        CHECK(corpus.captions[0].id == "c2");
        REQUIRE(corpus.objects.size() == 3);
        CHECK(corpus.objects[0].label == "dog");
        CHECK(corpus.objects[0].confidence == 0.95);
        CHECK(corpus.objects[1].image_id == "img2");
        CHECK(corpus.objects[2].label == "bench");  // exactly at the floor is kept
        std::set<std::string> ids;
        for (const auto& o : corpus.objects) ids.insert(o.id);
        CHECK(ids == std::set<std::string>{"o1", "o2", "o3"});
        CHECK(corpus.flags.empty());
    }
    SUBCASE("idempotent") {
        CHECK(build_context_corpus(corpus.captions, corpus.objects, cfg, s.images) == corpus);
    }
    SUBCASE("raising the floor never adds objects") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<DetectedObject> random;
            for (int i = 0; i < 12; ++i)
                random.push_back(object("img" + std::to_string(1 + i % 2), "l" + std::to_string(i % 5), u(rng)));
            std::size_t previous = SIZE_MAX;
            for (double floor : {0.0, 0.25, 0.5, 0.75, 1.0}) {
                cfg.confidence_floor = floor;
                const auto n = build_context_corpus({}, random, cfg, s.images).objects.size();
                CHECK(n <= previous);
                previous = n;
            }
        }
    }
}

TEST_CASE("decisive-risk flags") {
    RecognitionBackendConfig cfg;
    Session s = session_with_images(2);
    s.corpus.captions = {{"c1", "img1", "A dog on the beach", Origin::machine, false},
                         {"c2", "img2", "people at a table", Origin::machine, false},
                         {"c3", "img2", "unrelated deleted", Origin::machine, true}};
    s.corpus.objects = {{"o1", "img1", "dog", 0.95, {0, 0, 1, 1}, Origin::machine, false},
                        {"o2", "img2", "Dog", 0.6, {0, 0, 1, 1}, Origin::machine, false},
                        {"o3", "img1", "cup", 0.69, {0, 0, 1, 1}, Origin::machine, true}};
    s.keywords = {"beach", "the dog"};
    const ContextCorpus before = s.corpus;
    const auto flags = flag_decisive_risks(s.corpus, s.keywords, cfg);
    CHECK(s.corpus == before);

    auto has = [&](const std::string& id, FlagReason r) {
        return std::any_of(flags.begin(), flags.end(),
                           [&](const DecisiveRiskFlag& f) { return f.target.id == id && f.reason == r; });
    };
    CHECK_FALSE(has("c1", FlagReason::unreferenced_by_keywords));
    CHECK(has("c2", FlagReason::unreferenced_by_keywords));
    CHECK_FALSE(has("c3", FlagReason::unreferenced_by_keywords));
    CHECK(has("o2", FlagReason::low_confidence));
    CHECK_FALSE(has("o1", FlagReason::low_confidence));
    CHECK(has("o1", FlagReason::duplicate_label));
    CHECK(has("o2", FlagReason::duplicate_label));
    CHECK_FALSE(has("o3", FlagReason::low_confidence));
    CHECK(flags.size() == 4);

    CHECK(content_words("The dog, on a beach and in the park") == std::vector<std::string>{"dog", "beach", "park"});
    refresh_flags(s, cfg);
    CHECK(s.corpus.flags == flags);
}

TEST_CASE("recognize_session") {
    const auto reader = [](const ImageAsset& img) { return "payload-" + img.id; };
    RecognitionBackendConfig cfg;
    ScriptedBackend b;
    b.detect_response = json{{"objects", {detection("dog", 0.9), detection("ball", 0.2)}}};
    Session s = session_with_images(2);
    s.keywords = {"dog"};

    CHECK(recognize_session(s, b, b, reader, cfg) == 2);
    CHECK(s.corpus.captions.size() == 2);
    CHECK(s.corpus.objects.size() == 2);
    CHECK(s.edits.size() == 4);
    for (const auto& e : s.edits) CHECK(e.action == EditAction::add);
    CHECK(replay_edit_log(s.edits, s.images).corpus == editable_state(s).corpus);  // keywords were set without an edit
    CHECK_NOTHROW(validate(s));

    SUBCASE("only new images are processed") {
        CHECK(recognize_session(s, b, b, reader, cfg) == 0);
        ImageAsset img = s.images[0];
        img.id = "img3";
        s.images.push_back(img);
        CHECK(recognize_session(s, b, b, reader, cfg) == 1);
        CHECK(s.corpus.captions.size() == 3);
        CHECK(s.corpus.captions.back().id == "c3");
        CHECK(s.corpus.objects.size() == 3);
    }
    SUBCASE("a failing backend leaves the session untouched") {
        ImageAsset img = s.images[0];
        img.id = "img3";
        s.images.push_back(img);
        img.id = "img4";
        s.images.push_back(img);
        b.fail_image = "img4";
        const Session before = s;
        CHECK(code_of([&] { recognize_session(s, b, b, reader, cfg); }) == ErrorCode::backend_timeout);
        CHECK(s == before);
    }
}

TEST_CASE("remote recognizer over HTTP") {
    FakeServer fake;
    json last_caption_request;
    fake.server().Post("/v1/caption", [&](const httplib::Request& req, httplib::Response& res) {
        last_caption_request = json::parse(req.body);
        res.set_content(json{{"caption", "a red kite"}}.dump(), "application/json");
    });
    fake.server().Post("/v1/detect", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        if (body["format"] == "bad") return res.set_content("not json", "text/plain");
        if (body["format"] == "err") return res.set_content(R"({"error":"model offline"})", "application/json");
        if (body["format"] == "500") {
            res.status = 500;
            return res.set_content("{}", "application/json");
        }
        if (body["format"] == "slow") std::this_thread::sleep_for(std::chrono::milliseconds(400));
        res.set_content(json{{"objects", {detection("kite", 0.8)}}}.dump(), "application/json");
    });
    fake.start();

    RecognitionBackendConfig cfg;
    cfg.kind = BackendKind::remote;
    cfg.endpoint_url = fake.url() + "/v1";
    cfg.timeout_ms = 200;
    RemoteRecognizer remote(cfg);

    ImageAsset img = kImage;
    CHECK(caption_image(remote, img, "\x01\x02payload").text == "a red kite");
    CHECK(last_caption_request["image"] == base64_encode("\x01\x02payload"));
    CHECK(last_caption_request["format"] == "jpg");
    CHECK(detect_objects(remote, img, "p", cfg).at(0).label == "kite");

    img.bytes_ref = "x.bad";
    CHECK(code_of([&] { detect_objects(remote, img, "p", cfg); }) == ErrorCode::malformed_response);
    img.bytes_ref = "x.err";
    CHECK(code_of([&] { detect_objects(remote, img, "p", cfg); }) == ErrorCode::backend_error);
    img.bytes_ref = "x.500";
    CHECK(code_of([&] { detect_objects(remote, img, "p", cfg); }) == ErrorCode::backend_error);
    img.bytes_ref = "x.slow";
    CHECK(code_of([&] { detect_objects(remote, img, "p", cfg); }) == ErrorCode::backend_timeout);

    fake.stop();
    CHECK(code_of([&] { caption_image(remote, kImage, "p"); }) == ErrorCode::backend_error);
}
