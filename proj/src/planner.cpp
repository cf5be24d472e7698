#include "qipp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

namespace qipp {
namespace {

std::vector<Action> legal_actions(const RobotState& state, const GridWorld& world) {
  if (state.remaining() <= 0) return {};
  return neighbors(state, world);
}

std::unique_ptr<SearchNode> make_node(std::vector<Action> history, const RobotState& state, const GridWorld& world,
                                      int depth, int max_depth) {
  auto node = std::make_unique<SearchNode>();
  node->history = std::move(history);
  node->state = state;
  if (depth < max_depth) node->actions = legal_actions(state, world);
  node->children.resize(node->actions.size());
  return node;
}

// Visited children ordered by value, ties to the lower index.
std::pair<int, int> top_two(const SearchNode& node) {
  int best = -1;
  int second = -1;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const SearchNode* c = node.child(i);
    if (c == nullptr || c->visits() == 0) continue;
    const int idx = static_cast<int>(i);
    if (best < 0 || c->value() > node.child(static_cast<std::size_t>(best))->value()) {
      second = best;
      best = idx;
    } else if (second < 0 || c->value() > node.child(static_cast<std::size_t>(second))->value()) {
      second = idx;
    }
  }
  return {best, second};
}

}  // namespace

void PlannerConfig::validate() const {
  if (rollouts_per_step < 1) throw std::invalid_argument("PlannerConfig: rollouts_per_step must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("PlannerConfig: max_depth must be >= 1");
  if (rollout_horizon < 0) throw std::invalid_argument("PlannerConfig: rollout_horizon must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("PlannerConfig: gamma must be in (0, 1]");
  if (!(ucb_c >= 0.0)) throw std::invalid_argument("PlannerConfig: ucb_c must be >= 0");
  if (!(significance > 0.0 && significance < 1.0)) {
    throw std::invalid_argument("PlannerConfig: significance must be in (0, 1)");
  }
}

void ValueStats::add(double x) {
  ++count;
  const double d = x - mean;
  mean += d / static_cast<double>(count);
  m2 += d * (x - mean);
}

double ValueStats::variance() const { return count < 2 ? 0.0 : std::max(m2, 0.0) / static_cast<double>(count - 1); }

int SearchNode::best_child() const { return top_two(*this).first; }
int SearchNode::runner_up_child() const { return top_two(*this).second; }

LatticeSearchModel::LatticeSearchModel(const GridWorld& world, const SensorModel& sensor,
                                       const ObjectiveConfig& objective, const LatticePosterior& root,
                                       std::vector<std::size_t> reward_points)
    : world_(&world), sensor_(sensor), objective_(objective), state_(root), reward_points_(std::move(reward_points)) {}

void LatticeSearchModel::reset() {
  state_.reset();
  last_.reset();
}

double LatticeSearchModel::step(const RobotState& from, const RobotState& to) {
  const std::vector<std::size_t> sensed = sensed_locations(*world_, sensor_, from, to);
  if (sensed.empty()) throw PlanningError("planner: sensor footprint is empty");
  std::vector<double> simulated(sensed.size());
  for (std::size_t j = 0; j < sensed.size(); ++j) simulated[j] = state_.mean()(static_cast<Eigen::Index>(sensed[j]));

  auto update = std::make_shared<LatticeUpdate>(state_.prepare(sensed, simulated));

  const bool quantile = objective_.kind == ObjectiveKind::quantile_change ||
                        objective_.kind == ObjectiveKind::quantile_se;
  std::vector<double> before;
  std::vector<double> after;
  if (reward_points_.empty()) {
    before.assign(state_.mean().data(), state_.mean().data() + state_.mean().size());
    if (quantile) after.assign(update->mean_after.data(), update->mean_after.data() + update->mean_after.size());
  } else {
    before.reserve(reward_points_.size());
    for (std::size_t i : reward_points_) before.push_back(state_.mean()(static_cast<Eigen::Index>(i)));
    if (quantile) {
      after.reserve(reward_points_.size());
      for (std::size_t i : reward_points_) after.push_back(update->mean_after(static_cast<Eigen::Index>(i)));
    }
  }

  RewardInputs in;
  in.candidate_means = update->candidate_means;
  in.candidate_variances = update->candidate_variances;
  in.mean_before = before;
  in.mean_after = after;
  in.noise_variance = state_.root().nominal_noise();
  const double r = evaluate_reward(objective_, in);

  state_.commit(*update);
  last_ = std::move(update);
  return r;
}

std::any LatticeSearchModel::last_step() const { return last_; }

void LatticeSearchModel::replay(const std::any& cached) {
  last_ = std::any_cast<std::shared_ptr<const LatticeUpdate>>(cached);
  state_.commit(*last_);
}

double discounted_return(std::span<const double> rewards, double gamma) {
  double g = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) g = rewards[k] + gamma * g;
  return g;
}

std::size_t ucb_select(const SearchNode& node, double c) {
  if (node.actions.empty()) throw PlanningError("planner: node has no legal actions");
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (node.child(i) == nullptr || node.child(i)->visits() == 0) return i;
  }
  const double log_n = std::log(static_cast<double>(std::max<long>(node.visits(), 1)));
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const SearchNode* ch = node.child(i);
    const double score = ch->value() + c * std::sqrt(log_n / static_cast<double>(ch->visits()));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

double welch_p_value(const ValueStats& a, const ValueStats& b) {
  if (a.count < 2 || b.count < 2) return 1.0;
  const double va = a.variance() / static_cast<double>(a.count);
  const double vb = b.variance() / static_cast<double>(b.count);
  const double diff = a.mean - b.mean;
  const double se2 = va + vb;
  if (!(se2 > 0.0)) return diff > 0.0 ? 0.0 : 1.0;
  const double t = diff / std::sqrt(se2);
  double df = se2 * se2;
  const double denom = (va * va) / static_cast<double>(a.count - 1) + (vb * vb) / static_cast<double>(b.count - 1);
  df = denom > 0.0 ? df / denom : static_cast<double>(a.count + b.count - 2);
  const boost::math::students_t dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

int commit_steps(const SearchNode& root, double significance) {
  int steps = 1;
  const SearchNode* node = &root;
  while (true) {
    const auto [best, second] = top_two(*node);
    if (best < 0 || second < 0) break;
    const SearchNode* b = node->child(static_cast<std::size_t>(best));
    const SearchNode* r = node->child(static_cast<std::size_t>(second));
    if (!(welch_p_value(b->stats, r->stats) < significance)) break;
    if (b->best_child() < 0) break;
    ++steps;
    node = b;
  }
  return steps;
}

SearchResult pomcp_search(SearchModel& model, const GridWorld& world, const RobotState& state,
                          const PlannerConfig& config, std::mt19937_64& rng) {
  config.validate();
  SearchResult result;
  result.root = make_node({}, state, world, 0, config.max_depth);
  SearchNode& root = *result.root;
  if (root.actions.empty()) throw PlanningError("planner: no legal action from the current state");

  std::vector<SearchNode*> path;
  std::vector<double> rewards;
  for (int sim = 0; sim < config.rollouts_per_step; ++sim) {
    model.reset();
    path.assign(1, &root);
    rewards.clear();
    const double c = config.ucb_c * [&] {
      const double sd = std::sqrt(root.stats.variance());
      if (sd > 0.0) return sd;
      const double m = std::abs(root.stats.mean);
      return m > 0.0 ? m : 1.0;
    }();

    SearchNode* node = &root;
    int depth = 0;
    while (!node->actions.empty()) {
      const std::size_t i = ucb_select(*node, c);
      auto& slot = node->children[i];
      if (slot && slot->edge_cache.has_value()) {
        model.replay(slot->edge_cache);
        rewards.push_back(slot->edge_reward);
        node = slot.get();
        ++depth;
        path.push_back(node);
        continue;
      }
      const RobotState next = apply_action(node->state, node->actions[i], world);
      const double r = model.step(node->state, next);
      rewards.push_back(r);
      const bool fresh = !slot;
      if (fresh) {
        std::vector<Action> history = node->history;
        history.push_back(node->actions[i]);
        slot = make_node(std::move(history), next, world, depth + 1, config.max_depth);
      }
      slot->edge_reward = r;
      slot->edge_cache = model.last_step();
      node = slot.get();
      ++depth;
      path.push_back(node);
      if (fresh) break;
    }

    // Fixed-horizon random rollout from the leaf.
    RobotState s = node->state;
    for (int h = 0; h < config.rollout_horizon; ++h) {
      const std::vector<Action> moves = legal_actions(s, world);
      if (moves.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
      const RobotState next = apply_action(s, moves[pick(rng)], world);
      rewards.push_back(model.step(s, next));
      s = next;
    }

    // Node k (k >= 1) is entered by reward k-1; the root shares node 1's return.
    for (std::size_t k = path.size(); k-- > 1;) {
      path[k]->stats.add(discounted_return(std::span<const double>(rewards).subspan(k - 1), config.gamma));
    }
    root.stats.add(discounted_return(rewards, config.gamma));
    ++result.simulations;
  }
  return result;
}

std::vector<Action> choose_actions(const SearchNode& root, const PlannerConfig& config) {
  const int steps = config.multi_step ? commit_steps(root, config.significance) : 1;
  const int allowed = std::min(steps, std::max(root.state.remaining(), 1));
  std::vector<Action> out;
  const SearchNode* node = &root;
  for (int k = 0; k < allowed; ++k) {
    const int best = node->best_child();
    if (best < 0) break;
    out.push_back(node->actions[static_cast<std::size_t>(best)]);
    node = node->child(static_cast<std::size_t>(best));
  }
  if (out.empty()) throw PlanningError("planner: search produced no visited root action");
  return out;
}

PomcpPlanner::PomcpPlanner(GridWorld world, SensorModel sensor, ObjectiveConfig objective, PlannerConfig config)
    : world_(std::move(world)), sensor_(sensor), objective_(std::move(objective)), config_(config) {
  sensor_.validate();
  objective_.validate();
  config_.validate();
}

std::vector<Action> PomcpPlanner::plan(const GpModel& belief, const RobotState& state, std::mt19937_64& rng) const {
  if (state.remaining() <= 0) throw PlanningError("planner: budget exhausted");
  const LatticePosterior root(belief, world_.measure_points());
  std::vector<std::size_t> reward_points;
  const std::size_t m = world_.measure_size();
  if (objective_.subsample > 0 && objective_.subsample < m) {
    std::vector<std::size_t> all(m);
    for (std::size_t i = 0; i < m; ++i) all[i] = i;
    // Partial Fisher-Yates with the planner's own generator.
    for (std::size_t i = 0; i < objective_.subsample; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, m - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(objective_.subsample);
    std::sort(all.begin(), all.end());
    reward_points = std::move(all);
  }
  LatticeSearchModel model(world_, sensor_, objective_, root, std::move(reward_points));
  const SearchResult search = pomcp_search(model, world_, state, config_, rng);
  return choose_actions(*search.root, config_);
}

std::vector<Action> coverage_plan(const GridWorld& world, std::size_t start, int budget) {
  std::vector<Action> moves;
  if (budget <= 0) return moves;
  const auto& dims = world.plan_dims();
  const int axes = world.axes();

  const Cell from = world.plan_cell(start);
  for (int a = 0; a < axes; ++a) {
    for (int k = 0; k < from[a]; ++k) moves.push_back(Action{a, -1});
  }

  // Serpentine cell order; consecutive cells are grid neighbours.
  const int nx = dims[0];
  const int ny = dims[1];
  const int nz = axes > 2 ? dims[2] : 1;
  std::vector<Cell> order;
  order.reserve(world.plan_size());
  int row = 0;
  for (int z = 0; z < nz; ++z) {
    for (int yi = 0; yi < ny; ++yi, ++row) {
      const int y = (z % 2 == 0) ? yi : ny - 1 - yi;
      for (int xi = 0; xi < nx; ++xi) {
        const int x = (row % 2 == 0) ? xi : nx - 1 - xi;
        order.push_back(Cell{x, y, z});
      }
    }
  }
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (int a = 0; a < axes; ++a) {
      const int d = order[i][a] - order[i - 1][a];
      if (d != 0) moves.push_back(Action{a, d});
    }
  }
  if (moves.size() > static_cast<std::size_t>(budget)) moves.resize(static_cast<std::size_t>(budget));
  return moves;
}

Action random_walk_plan(const RobotState& state, const GridWorld& world, std::mt19937_64& rng) {
  const std::vector<Action> moves = neighbors(state, world);
  if (moves.empty()) throw PlanningError("random walk: no legal action");
  std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
  return moves[pick(rng)];
}

}  // namespace qipp
