public static void main(String[] args) { System.out.println(args.length > 0 ? "y" : "n"); }
