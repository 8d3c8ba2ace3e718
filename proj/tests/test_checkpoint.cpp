#include "doctest.h"
#include "test_util.hpp"

#include "gvqa/checkpoint.hpp"
#include "gvqa/error.hpp"

#include <fstream>

using namespace gvqa;
using namespace gvqa::testsupport;

TEST_CASE("checkpoints round-trip header and float32 payload") {
    TempDir tmp("ckpt");
    Checkpoint c;
    c.kind = CheckpointKind::GrounderRaw;
    c.config_hash = 0xabcdef0123456789ULL;
    c.step = 4000;
    c.params = {0.5, -0.25, 1.0, 3.0};
    const auto path = tmp.path() / "g.ckpt";
    save_checkpoint(path, c);

    const Checkpoint back = load_checkpoint(path);
    CHECK(back.kind == c.kind);
    CHECK(back.config_hash == c.config_hash);
    CHECK(back.step == c.step);
    CHECK(back.params == c.params); // values chosen float-exact
}

TEST_CASE("kind tags distinguish raw, ema and vqa states") {
    TempDir tmp("ckpt");
    for (CheckpointKind kind :
         {CheckpointKind::GrounderRaw, CheckpointKind::GrounderEma, CheckpointKind::Vqa}) {
        Checkpoint c;
        c.kind = kind;
        c.params = {1.0};
        const auto path = tmp.path() / (std::string(to_string(kind)) + ".ckpt");
        save_checkpoint(path, c);
        CHECK(load_checkpoint(path).kind == kind);
    }
}

TEST_CASE("truncated and corrupt files are rejected") {
    TempDir tmp("ckpt");
    const auto path = tmp.path() / "bad.ckpt";
    {
        std::ofstream out(path, std::ios::binary);
        out << "GVQACKPT";
    }
    CHECK_THROWS_AS(load_checkpoint(path), Error);
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPT12345678901234567890";
    }
    CHECK_THROWS_AS(load_checkpoint(path), Error);
    CHECK_THROWS_AS(load_checkpoint(tmp.path() / "missing.ckpt"), Error);
}
