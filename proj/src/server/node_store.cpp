#include "uatrust/server/node_store.hpp"

namespace uatrust::server {

codec::DataValue NodeStore::read(const codec::NodeId& id) const
{
    std::lock_guard lock(mutex_);
    codec::DataValue dv;
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        dv.status = status::BadNodeIdUnknown;
        return dv;
    }
    dv.value = it->second.value;
    return dv;
}

StatusCode NodeStore::write(const codec::NodeId& id, const codec::Variant& value)
{
    std::lock_guard lock(mutex_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return status::BadNodeIdUnknown;
    if (!it->second.writable) return status::BadNotWritable;
    if (value.type() != it->second.value.type() || value.is_array() != it->second.value.is_array())
        return status::BadTypeMismatch;
    it->second.value = value;
    return status::Good;
}

void NodeStore::set(const codec::NodeId& id, NodeEntry entry)
{
    std::lock_guard lock(mutex_);
    nodes_[id] = std::move(entry);
}

std::optional<NodeEntry> NodeStore::get(const codec::NodeId& id) const
{
    std::lock_guard lock(mutex_);
    auto it = nodes_.find(id);
    if (it == nodes_.end()) return std::nullopt;
    return it->second;
}

std::map<codec::NodeId, NodeEntry> NodeStore::snapshot() const
{
    std::lock_guard lock(mutex_);
    return nodes_;
}

std::map<codec::NodeId, NodeEntry> default_nodes()
{
    return {
        {nodes::sensor(), {codec::Variant(21.5), false, "Sensor"}},
        {nodes::setpoint(), {codec::Variant(50.0), true, "Setpoint"}},
        {nodes::status(), {codec::Variant("RUNNING"), false, "Status"}},
    };
}

}  // namespace uatrust::server
