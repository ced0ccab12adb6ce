int a = b + b;
