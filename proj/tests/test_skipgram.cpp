#include "hetlink/errors.hpp"
#include "hetlink/skipgram.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace hetlink;

namespace {

double log_sigmoid(double x) { return -std::log1p(std::exp(-x)); }

EmbeddingTable random_table(std::mt19937_64& rng, std::size_t n, int dim, double scale) {
    EmbeddingTable t(n, dim);
    std::normal_distribution<double> normal(0.0, scale);
    for (auto& x : t.input_data()) x = normal(rng);
    for (auto& x : t.output_data()) x = normal(rng);
    return t;
}

/// Independent SGNS loss straight from the definition.
double reference_loss(const EmbeddingTable& t, NodeId c, NodeId ctx, const std::vector<NodeId>& negs) {
    auto dotp = [&](NodeId a, NodeId b) {
        double s = 0;
        for (int k = 0; k < t.dim(); ++k) s += t.input(a)[k] * t.output(b)[k];
        return s;
    };
    double loss = -log_sigmoid(dotp(c, ctx));
    for (auto n : negs) loss -= log_sigmoid(-dotp(c, n));
    return loss;
}

std::vector<std::vector<NodeId>> two_block_corpus(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<NodeId>> walks;
    for (int w = 0; w < 200; ++w) {
        NodeId base = w % 2 == 0 ? 0 : 6;
        std::vector<NodeId> walk;
        for (int i = 0; i < 20; ++i) walk.push_back(base + static_cast<NodeId>(rng() % 6));
        walks.push_back(walk);
    }
    return walks;
}

} // namespace

TEST_CASE("softmax examples") {
    EmbeddingTable same(4, 3);
    std::fill(same.input_data().begin(), same.input_data().end(), 0.7);
    for (NodeId n = 0; n < 4; ++n) CHECK(softmax_prob(same, 1, n) == doctest::Approx(0.25));

    EmbeddingTable two(2, 1); // f(u)=sqrt5, f(other)=0: dots (5, 0)
    two.input(0)[0] = std::sqrt(5.0);
    two.input(1)[0] = 0.0;
    CHECK(softmax_prob(two, 0, 0) == doctest::Approx(std::exp(5.0) / (std::exp(5.0) + 1.0)).epsilon(1e-12));
    CHECK(softmax_prob(two, 0, 1) == doctest::Approx(1.0 / (std::exp(5.0) + 1.0)).epsilon(1e-12));

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        auto t = random_table(rng, 7, 5, 3.0);
        double sum = 0.0;
        for (NodeId n = 0; n < 7; ++n) sum += softmax_prob(t, 2, n);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("sgns loss examples") {
    EmbeddingTable zero(3, 4);
    std::vector<NodeId> negs{2};
    CHECK(sgns_loss_and_grads(zero, 0, 1, negs).loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(2.0 * std::log(2.0) == doctest::Approx(1.3863).epsilon(1e-4));

    EmbeddingTable big(3, 1);
    big.input(0)[0] = 30.0;
    big.output(1)[0] = 30.0;
    big.output(2)[0] = -30.0;
    CHECK(sgns_loss_and_grads(big, 0, 1, negs).loss < 1e-12);

    std::vector<NodeId> clash{1};
    CHECK_THROWS_AS(sgns_loss_and_grads(zero, 0, 1, clash), std::invalid_argument);
}

TEST_CASE("sgns gradients match central differences") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        auto table = random_table(rng, 5, 4, 0.8);
        NodeId c = static_cast<NodeId>(rng() % 5);
        NodeId ctx = static_cast<NodeId>((c + 1 + rng() % 4) % 5);
        std::vector<NodeId> negs;
        for (int i = 0; i < 3; ++i) {
            NodeId n;
            do n = static_cast<NodeId>(rng() % 5); while (n == ctx);
            negs.push_back(n);
        }
        auto res = sgns_loss_and_grads(table, c, ctx, negs);
        CHECK(res.loss == doctest::Approx(reference_loss(table, c, ctx, negs)).epsilon(1e-12));

        // analytic gradient over the whole table, input rows then output rows
        const std::size_t half = table.input_data().size();
        std::vector<double> analytic(2 * half, 0.0);
        for (int k = 0; k < 4; ++k) {
            analytic[c * 4 + k] += res.center[k];
            analytic[half + ctx * 4 + k] += res.context[k];
            for (std::size_t i = 0; i < negs.size(); ++i) analytic[half + negs[i] * 4 + k] += res.negatives[i][k];
        }
        std::vector<double> x(table.input_data());
        x.insert(x.end(), table.output_data().begin(), table.output_data().end());
        auto f = [&](const std::vector<double>& v) {
            EmbeddingTable t(5, 4);
            std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half), t.input_data().begin());
            std::copy(v.begin() + static_cast<std::ptrdiff_t>(half), v.end(), t.output_data().begin());
            return reference_loss(t, c, ctx, negs);
        };
        auto numeric = oracle::central_gradient(f, x, 1e-5);
        CHECK(oracle::max_relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("training pairs are order independent") {
    std::vector<std::vector<NodeId>> walks{{0, 1, 2, 3}, {4, 5}, {6}};
    auto pairs = training_pairs(walks, 2);
    CHECK(pairs.size() == 10 + 2);
    std::reverse(walks.begin(), walks.end());
    auto again = training_pairs(walks, 2);
    CHECK(std::multiset(pairs.begin(), pairs.end()) == std::multiset(again.begin(), again.end()));
}

TEST_CASE("length-one walk returns the initial table") {
    SkipGramConfig c;
    c.dim = 8;
    c.seed = 3;
    auto res = train_embeddings({{2}}, 4, c);
    CHECK(res.epoch_losses.empty());
    const double bound = 0.5 / 8;
    for (double x : res.table.input_data()) {
        CHECK(x >= -bound);
        CHECK(x <= bound);
    }
    CHECK_THROWS_AS(train_embeddings({}, 4, c), DataError);
}

TEST_CASE("two-block corpus separates communities") {
    SkipGramConfig c;
    c.dim = 16;
    c.seed = 5;
    auto res = train_embeddings(two_block_corpus(1), 12, c);
    double intra = 0, inter = 0;
    int n_intra = 0, n_inter = 0;
    for (NodeId a = 0; a < 12; ++a) {
        for (NodeId b = a + 1; b < 12; ++b) {
            double cs = cosine(res.table.input(a), res.table.input(b));
            if ((a < 6) == (b < 6)) intra += cs, ++n_intra;
            else inter += cs, ++n_inter;
        }
    }
    CHECK(intra / n_intra > inter / n_inter);
}

TEST_CASE("training is deterministic and lowers the loss") {
    SkipGramConfig c;
    c.dim = 16;
    int decreased = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        c.seed = seed;
        auto a = train_embeddings(two_block_corpus(seed), 12, c);
        auto b = train_embeddings(two_block_corpus(seed), 12, c);
        CHECK(a.table == b.table);
        CHECK(a.epoch_losses == b.epoch_losses);
        decreased += a.epoch_losses.back() < a.epoch_losses.front();
        for (double x : a.table.input_data()) CHECK(std::isfinite(x));
    }
    CHECK(decreased >= 2);
}

TEST_CASE("config validation") {
    SkipGramConfig c;
    c.noise_exponent = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.window = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    Config cfg;
    cfg.set("reproducible", "true");
    cfg.set("threads", "4");
    CHECK_THROWS_AS(SkipGramConfig::from_config(cfg), ConfigError);
}

TEST_CASE("edge operators") {
    std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    CHECK(embed_edge(a, b, EdgeOp::hadamard) == std::vector<double>{4, 10, 18});
    CHECK(embed_edge(a, b, EdgeOp::average) == std::vector<double>{2.5, 3.5, 4.5});
    CHECK(embed_edge(a, b, EdgeOp::l1) == std::vector<double>{3, 3, 3});
    CHECK(embed_edge(a, b, EdgeOp::l2) == std::vector<double>{9, 9, 9});
    CHECK(embed_edge(a, a, EdgeOp::l1) == std::vector<double>{0, 0, 0});
    for (auto op : {EdgeOp::hadamard, EdgeOp::average, EdgeOp::l1, EdgeOp::l2}) {
        CHECK(embed_edge(a, b, op) == embed_edge(b, a, op));
        CHECK(parse_edge_op(edge_op_name(op)) == op);
    }
    CHECK_THROWS_AS(parse_edge_op("max"), ConfigError);
    std::vector<double> shorter{1, 2};
    CHECK_THROWS_AS(embed_edge(a, shorter, EdgeOp::hadamard), DimensionMismatch);
}

TEST_CASE("embedding file round trip") {
    std::mt19937_64 rng(8);
    auto t = random_table(rng, 4, 3, 1.0);
    Config header;
    header.set("corpus_hash", "123");
    std::ostringstream out;
    write_embeddings(out, t, header);
    std::istringstream in(out.str());
    auto back = read_embeddings(in);
    CHECK(back.header.get_string("corpus_hash", "") == "123");
    REQUIRE(back.vectors.size() == 4);
    for (NodeId v = 0; v < 4; ++v)
        CHECK(back.vectors[v] == std::vector<double>(t.input(v).begin(), t.input(v).end()));
}
