#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fairsage/errors.hpp"
#include "fairsage/gradcheck.hpp"

using namespace fairsage;

namespace {

ModelConfig config_for(ModelKind kind, Aggregator agg) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.aggregator = agg;
    cfg.feature_dim = 5;
    cfg.hidden_dim = 6;
    cfg.layers = kind == ModelKind::lr ? 0 : 2;
    cfg.fanouts = kind == ModelKind::sage ? std::vector<std::size_t>{4, 3}
                                          : std::vector<std::size_t>{};
    cfg.dropout_rate = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("reverse-mode gradients match finite differences for every model") {
    CHECK(model_grad_max_rel_error(config_for(ModelKind::lr, Aggregator::mean), 11, 3) < 1e-4);
    CHECK(model_grad_max_rel_error(config_for(ModelKind::mlp, Aggregator::mean), 12, 3) < 1e-4);
    CHECK(model_grad_max_rel_error(config_for(ModelKind::sage, Aggregator::mean), 13, 3) < 1e-4);
    CHECK(model_grad_max_rel_error(config_for(ModelKind::sage, Aggregator::maxpool), 14, 3) <
          1e-4);
    CHECK(model_grad_max_rel_error(config_for(ModelKind::sage, Aggregator::attention), 15, 3) <
          1e-4);
}

TEST_CASE("the check is deterministic per seed and needs points") {
    ModelConfig cfg = config_for(ModelKind::sage, Aggregator::mean);
    const double a = model_grad_max_rel_error(cfg, 7, 2);
    const double b = model_grad_max_rel_error(cfg, 7, 2);
    CHECK(a == b);
    CHECK_THROWS_AS(model_grad_max_rel_error(cfg, 7, 0), UsageError);

    // a dropout rate in the config must not disturb the check
    cfg.dropout_rate = 0.5;
    CHECK(model_grad_max_rel_error(cfg, 7, 2) == a);
}
