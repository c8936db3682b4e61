"""Graph backbones: GCN, GAT, Pro-GNN and PTDNet."""

BACKBONES = ("gcn", "gat", "prognn", "ptdnet")
