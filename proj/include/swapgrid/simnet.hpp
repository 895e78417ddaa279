#pragma once

// Entity-level simulation: the utility, the station operator and the EVs run
// the distributed algorithms by exchanging messages over fixed links. Every
// cross-entity value goes through the log, serialized with named fields, and
// is read back from there by the receiver.

#include "swapgrid/admm.hpp"
#include "swapgrid/dualdecomp.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace swapgrid::simnet
{

enum class EntityKind
{
    Utility,
    Operator,
    Ev,
};

struct EntityId
{
    EntityKind kind = EntityKind::Utility;
    int index = -1; // EV index; -1 on an EV target means every EV (broadcast)

    static EntityId utility() { return {EntityKind::Utility, -1}; }
    static EntityId op() { return {EntityKind::Operator, -1}; }
    static EntityId ev(int a) { return {EntityKind::Ev, a}; }
    static EntityId all_evs() { return {EntityKind::Ev, -1}; }

    bool operator==(const EntityId&) const = default;
};

/// "utility", "operator", "ev:<a>", "ev:*".
std::string to_string(const EntityId& id);
EntityId parse_entity(const std::string& text);

enum class Tag
{
    WEstimate,       // {"w_mw": [...]}
    AggregateAssign, // {"u_j": [...]}
    LambdaPrice,     // {"lambda": [...]}
    MuPrice,         // {"mu": [...]}
    EvChoice,        // {"station": j}
};

std::string to_string(Tag tag);
Tag parse_tag(const std::string& text);

enum class Algo
{
    Admm,
    Dual,
};

struct Message
{
    int round = 0;
    EntityId from;
    EntityId to;
    Tag tag = Tag::WEstimate;
    nlohmann::json payload;
};

/// Append-only message record of one session.
class MessageLog
{
public:
    explicit MessageLog(Algo algo = Algo::Admm) : algo_(algo) {}

    Algo algo() const { return algo_; }
    const std::vector<Message>& messages() const { return messages_; }
    std::size_t size() const { return messages_.size(); }

    /// Appends without any link check; the transport checks before calling.
    void append(Message m) { messages_.push_back(std::move(m)); }

    /// One JSON object per line: {round, from, to, tag, payload}.
    void write_jsonl(std::ostream& out) const;
    static MessageLog read_jsonl(std::istream& in, Algo algo);

private:
    Algo algo_;
    std::vector<Message> messages_;
};

/// True when `tag` may travel from `from` to `to` under `algo`.
bool link_allowed(Algo algo, const EntityId& from, const EntityId& to, Tag tag);

/// Fixed-link transport. send() throws TransportViolation for a tag that is
/// not allowed on the link and returns the logged message, which is what the
/// receiver reads.
class Network
{
public:
    explicit Network(Algo algo) : log_(algo) {}

    const Message& send(int round, EntityId from, EntityId to, Tag tag, nlohmann::json payload);

    const MessageLog& log() const { return log_; }
    MessageLog take_log() { return std::move(log_); }

private:
    MessageLog log_;
};

struct Violation
{
    char rule = 'a';         // 'a'..'d', see audit_privacy
    std::size_t message = 0; // index into the log
    std::string detail;
};

struct AuditReport
{
    bool ok = true;
    std::vector<Violation> violations;
};

/// Checks a log against the information each party may learn:
///  (a) no per-EV field (position, gamma, charge, distances, choice) in any
///      payload to the utility;
///  (b) under ADMM, nothing but aggregates crosses operator -> utility;
///  (c) under dual decomposition, no grid internals (impedances, flows,
///      voltages, costs) in payloads to the operator or the EVs;
///  (d) EVs never message each other.
/// Payload keys are matched against the field names of the tag schema.
AuditReport audit_privacy(const MessageLog& log);

struct SessionOptions
{
    bool concurrent = false; // evaluate EV best responses on worker threads
};

struct AdmmSession
{
    admm::AdmmResult result;
    MessageLog log;
};

struct DualSession
{
    dual::DualResult result;
    MessageLog log;
};

AdmmSession run_admm_session(const grid::Grid& grid, const fleet::Scenario& s, const admm::AdmmParams& params = {},
                             const conic::ConicSolver& solver = conic::InteriorPointSolver{});

DualSession run_dual_session(const grid::Grid& grid, const fleet::Scenario& s, const dual::DualParams& params = {},
                             const SessionOptions& options = {},
                             const conic::ConicSolver& solver = conic::InteriorPointSolver{});

} // namespace swapgrid::simnet
