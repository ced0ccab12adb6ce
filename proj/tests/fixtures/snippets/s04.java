String s = "if";
