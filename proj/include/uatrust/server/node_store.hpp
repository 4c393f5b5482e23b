#pragma once

#include "uatrust/codec/builtin.hpp"

#include <map>
#include <mutex>
#include <string>
#include <variant>

namespace uatrust::server {

struct NodeEntry {
    codec::Variant value;
    bool writable = false;
    std::string display_name;
};

// Shared, internally locked. Every read and every write is atomic on its own.
class NodeStore {
public:
    NodeStore() = default;
    explicit NodeStore(std::map<codec::NodeId, NodeEntry> nodes) : nodes_(std::move(nodes)) {}

    // Unknown nodes yield BadNodeIdUnknown, never a default value.
    codec::DataValue read(const codec::NodeId& id) const;
    // BadNodeIdUnknown, BadNotWritable, or BadTypeMismatch when the built-in type differs.
    StatusCode write(const codec::NodeId& id, const codec::Variant& value);

    void set(const codec::NodeId& id, NodeEntry entry);
    std::optional<NodeEntry> get(const codec::NodeId& id) const;
    std::map<codec::NodeId, NodeEntry> snapshot() const;

private:
    mutable std::mutex mutex_;
    std::map<codec::NodeId, NodeEntry> nodes_;
};

namespace nodes {
inline codec::NodeId sensor() { return codec::NodeId::string(1, "sensor"); }
inline codec::NodeId setpoint() { return codec::NodeId::string(1, "setpoint"); }
inline codec::NodeId status() { return codec::NodeId::string(1, "status"); }
}  // namespace nodes

// sensor (read-only double 21.5), setpoint (writable double 50.0), status (read-only "RUNNING").
std::map<codec::NodeId, NodeEntry> default_nodes();

}  // namespace uatrust::server
