if (x) { return; }
